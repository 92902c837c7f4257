#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "sparsecode/solvers.hpp"

namespace sparsecode {

std::string_view to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::Fista: return "FISTA";
    case Algorithm::Sparsa: return "SpaRSA";
    case Algorithm::Admm: return "ADMM";
    case Algorithm::Blasso: return "BLasso";
  }
  return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "fista") return Algorithm::Fista;
  if (lower == "sparsa") return Algorithm::Sparsa;
  if (lower == "admm") return Algorithm::Admm;
  if (lower == "blasso") return Algorithm::Blasso;
  throw ArgumentError("unknown algorithm '" + std::string(name) + "'");
}

SolverConfig SolverConfig::fista(int max_iterations) {
  SolverConfig c;
  c.algorithm = Algorithm::Fista;
  c.max_iterations = max_iterations;
  return c;
}

SolverConfig SolverConfig::sparsa(int max_iterations) {
  SolverConfig c;
  c.algorithm = Algorithm::Sparsa;
  c.max_iterations = max_iterations;
  return c;
}

SolverConfig SolverConfig::admm(double rho, int max_iterations) {
  SolverConfig c;
  c.algorithm = Algorithm::Admm;
  c.max_iterations = max_iterations;
  c.rho = rho;
  return c;
}

SolverConfig SolverConfig::blasso(double epsilon, int max_iterations) {
  SolverConfig c;
  c.algorithm = Algorithm::Blasso;
  c.max_iterations = max_iterations;
  c.epsilon = epsilon;
  return c;
}

void SolverConfig::validate() const {
  if (max_iterations < 1) throw ArgumentError("max_iterations must be at least 1");
  if (!(convergence_tol >= 0.0)) throw ArgumentError("convergence_tol must be non-negative");
  if (rho.has_value() != (algorithm == Algorithm::Admm))
    throw ArgumentError("rho must be given for ADMM and only for ADMM");
  if (epsilon.has_value() != (algorithm == Algorithm::Blasso))
    throw ArgumentError("epsilon must be given for BLasso and only for BLasso");
  if (rho && !(*rho > 0.0 && std::isfinite(*rho))) throw ArgumentError("rho must be positive");
  if (epsilon && !(*epsilon > 0.0 && std::isfinite(*epsilon))) throw ArgumentError("epsilon must be positive");
  if (blasso_xi && !(*blasso_xi >= 0.0)) throw ArgumentError("blasso_xi must be non-negative");
  if (sparsa_window < 1) throw ArgumentError("sparsa_window must be positive");
  if (!(sparsa_alpha_min > 0.0) || !(sparsa_alpha_min <= sparsa_alpha_max))
    throw ArgumentError("sparsa alpha bounds must satisfy 0 < alpha_min <= alpha_max");
  if (sparsa_max_retries < 0) throw ArgumentError("sparsa_max_retries must be non-negative");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double relative_change(const Eigen::Ref<const Vector>& now, const Eigen::Ref<const Vector>& before) {
  const double scale = std::max(1.0, before.lpNorm<Eigen::Infinity>());
  return (now - before).lpNorm<Eigen::Infinity>() / scale;
}

// Shared iteration driver. Columns that converge or produce non-finite values are
// frozen individually; their final codes are kept in `result` while the batch
// keeps stepping (frozen columns never influence the others).
template <class State, class Step, class Codes, class Finite, class Done>
SolveResult drive(const SparseCodingProblem& problem, const SolverConfig& config, State state,
                  double setup_seconds, Step step, Codes codes, Finite column_finite, Done column_done) {
  const Index m = problem.count();
  SolveResult out;
  out.trace.setup_seconds = setup_seconds;
  Matrix result = Matrix::Zero(problem.atoms(), m);
  std::vector<char> frozen(static_cast<std::size_t>(m), 0);
  Index frozen_count = 0;
  double elapsed = 0.0;

  for (int it = 1; it <= config.max_iterations; ++it) {
    const auto t0 = Clock::now();
    Matrix previous = codes(state);
    state = step(std::move(state));
    const Matrix& z = codes(state);
    for (Index j = 0; j < m; ++j) {
      if (frozen[j]) continue;
      if (!column_finite(state, j)) {
        result.col(j) = previous.col(j);
        frozen[j] = 1;
        ++frozen_count;
        ++out.trace.diverged_columns;
      } else if (column_done(state, j, previous)) {
        result.col(j) = z.col(j);
        frozen[j] = 1;
        ++frozen_count;
        ++out.trace.converged_columns;
      }
    }
    elapsed += seconds_since(t0);

    TraceRecord record;
    record.iteration = it;
    record.seconds = elapsed;
    if (config.trace_objective) {
      CodeBatch effective(z);
      for (Index j = 0; j < m; ++j)
        if (frozen[j]) effective.data().col(j) = result.col(j);
      record.objective = objective(problem, effective).mean();
      record.reconstruction_error = mean_reconstruction_error(problem.dictionary, effective, problem.signals);
    } else {
      record.objective = std::numeric_limits<double>::quiet_NaN();
      record.reconstruction_error = std::numeric_limits<double>::quiet_NaN();
    }
    out.trace.records.push_back(record);
    if (frozen_count == m) break;
  }

  const Matrix& z = codes(state);
  for (Index j = 0; j < m; ++j)
    if (!frozen[j]) result.col(j) = z.col(j);
  out.codes = CodeBatch(std::move(result));
  if (out.trace.diverged_columns > 0)
    out.trace.termination = Termination::Diverged;
  else if (frozen_count == m)
    out.trace.termination = Termination::Converged;
  else
    out.trace.termination = Termination::BudgetExhausted;
  return out;
}

SolveResult solve_fista(const SparseCodingProblem& problem, const SolverConfig& config) {
  const auto t0 = Clock::now();
  const LipschitzEstimate& lip = problem.dictionary.lipschitz();
  FistaState state = FistaState::start(problem);
  const double setup = seconds_since(t0);
  if (lip.degenerate) {
    // W = 0: every z has the same loss and z = 0 minimizes the penalty.
    SolveResult out;
    out.codes = state.z;
    out.trace.setup_seconds = setup;
    out.trace.termination = Termination::Converged;
    out.trace.converged_columns = problem.count();
    return out;
  }
  const double lipschitz = lip.value;
  const double tol = config.convergence_tol;
  return drive(
      problem, config, std::move(state), setup,
      [&](FistaState s) { return fista_step(std::move(s), problem, lipschitz); },
      [](const FistaState& s) -> const Matrix& { return s.z.data(); },
      [](const FistaState& s, Index j) { return s.z.data().col(j).allFinite() && s.y.col(j).allFinite(); },
      [tol](const FistaState& s, Index j, const Matrix& prev) {
        return relative_change(s.z.data().col(j), prev.col(j)) < tol;
      });
}

SolveResult solve_sparsa(const SparseCodingProblem& problem, const SolverConfig& config) {
  const auto t0 = Clock::now();
  problem.dictionary.lipschitz();  // used by the safeguard fallback
  SparsaState state = SparsaState::start(problem, config.sparsa_window);
  const double setup = seconds_since(t0);
  const double tol = config.convergence_tol;
  return drive(
      problem, config, std::move(state), setup,
      [&](SparsaState s) { return sparsa_step(std::move(s), problem, config); },
      [](const SparsaState& s) -> const Matrix& { return s.z.data(); },
      [](const SparsaState& s, Index j) { return s.z.data().col(j).allFinite() && std::isfinite(s.alpha[j]); },
      [tol](const SparsaState& s, Index j, const Matrix& prev) {
        return s.stalled[j] || relative_change(s.z.data().col(j), prev.col(j)) < tol;
      });
}

SolveResult solve_admm(const SparseCodingProblem& problem, const SolverConfig& config) {
  const double rho = *config.rho;
  const auto t0 = Clock::now();
  AdmmState state = AdmmState::start(problem, rho);
  const double setup = seconds_since(t0);
  const double tol = config.convergence_tol;
  return drive(
      problem, config, std::move(state), setup,
      [&](AdmmState s) { return admm_step(std::move(s), problem, rho); },
      [](const AdmmState& s) -> const Matrix& { return s.z.data(); },
      [](const AdmmState& s, Index j) {
        return s.z.data().col(j).allFinite() && s.x.col(j).allFinite() && s.y.col(j).allFinite();
      },
      [tol](const AdmmState& s, Index j, const Matrix& prev) {
        // The iterate change alone can vanish while x and z still disagree, so
        // the primal residual has to be small as well.
        const double change = relative_change(s.z.data().col(j), prev.col(j));
        const double scale = std::max(1.0, s.z.data().col(j).lpNorm<Eigen::Infinity>());
        const double residual = (s.x.col(j) - s.z.data().col(j)).lpNorm<Eigen::Infinity>() / scale;
        return (change < tol && residual < tol) || (change == 0.0 && residual == 0.0);
      });
}

SolveResult solve_blasso(const SparseCodingProblem& problem, const SolverConfig& config) {
  const double epsilon = *config.epsilon;
  const double xi = config.xi();
  const auto t0 = Clock::now();
  problem.dictionary.gram();
  BlassoState state = BlassoState::start(problem);
  const double setup = seconds_since(t0);
  return drive(
      problem, config, std::move(state), setup,
      [&](BlassoState s) { return blasso_step(std::move(s), problem, epsilon, xi); },
      [](const BlassoState& s) -> const Matrix& { return s.z.data(); },
      [](const BlassoState& s, Index j) { return s.z.data().col(j).allFinite(); },
      [](const BlassoState& s, Index j, const Matrix&) { return s.finished[j] != 0; });
}

}  // namespace

SolveResult solve(const SparseCodingProblem& problem, const SolverConfig& config) {
  config.validate();
  switch (config.algorithm) {
    case Algorithm::Fista: return solve_fista(problem, config);
    case Algorithm::Sparsa: return solve_sparsa(problem, config);
    case Algorithm::Admm: return solve_admm(problem, config);
    case Algorithm::Blasso: return solve_blasso(problem, config);
  }
  throw ArgumentError("solve: unknown algorithm");
}

SolveResult encode_batch(const SparseCodingProblem& problem, const SolverConfig& config) {
  return solve(problem, config);
}

SolveResult solve_columnwise(const SparseCodingProblem& problem, const SolverConfig& config) {
  const Index m = problem.count();
  SolveResult out;
  out.codes = CodeBatch::zeros(problem.atoms(), m);
  std::vector<SolverTrace> traces;
  traces.reserve(static_cast<std::size_t>(m));
  int longest = 0;
  for (Index j = 0; j < m; ++j) {
    SparseCodingProblem single(problem.dictionary, problem.signals.columns(j, 1), problem.lambda,
                               problem.non_negative);
    SolveResult r = solve(single, config);
    out.codes.data().col(j) = r.codes.data().col(0);
    out.trace.setup_seconds += r.trace.setup_seconds;
    out.trace.converged_columns += r.trace.converged_columns;
    out.trace.diverged_columns += r.trace.diverged_columns;
    longest = std::max(longest, r.trace.iterations());
    traces.push_back(std::move(r.trace));
  }
  double seconds = 0.0;
  for (int i = 0; i < longest; ++i) {
    TraceRecord rec;
    rec.iteration = i + 1;
    double obj = 0.0, err = 0.0, step_time = 0.0;
    for (const SolverTrace& t : traces) {
      if (t.records.empty()) continue;
      const auto& r = t.records[std::min<std::size_t>(i, t.records.size() - 1)];
      obj += r.objective;
      err += r.reconstruction_error;
      if (static_cast<std::size_t>(i) < t.records.size())
        step_time += r.seconds - (i > 0 ? t.records[i - 1].seconds : 0.0);
    }
    seconds += step_time;
    rec.objective = obj / static_cast<double>(m);
    rec.reconstruction_error = err / static_cast<double>(m);
    rec.seconds = seconds;
    out.trace.records.push_back(rec);
  }
  if (out.trace.diverged_columns > 0)
    out.trace.termination = Termination::Diverged;
  else if (out.trace.converged_columns == m)
    out.trace.termination = Termination::Converged;
  else
    out.trace.termination = Termination::BudgetExhausted;
  return out;
}

}  // namespace sparsecode
