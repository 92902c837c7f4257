#include <algorithm>
#include <limits>

#include "sparsecode/prox.hpp"
#include "sparsecode/solvers.hpp"

namespace sparsecode {

namespace {

double column_objective(const Eigen::Ref<const Vector>& wz, const Eigen::Ref<const Vector>& x,
                        const Eigen::Ref<const Vector>& z, double lambda) {
  return 0.5 * ordered_squared_distance(wz, x) + lambda * ordered_abs_sum(z);
}

}  // namespace

SparsaState SparsaState::start(const SparseCodingProblem& problem, int window) {
  if (window < 1) throw ArgumentError("SparsaState: window must be positive");
  const Index m = problem.count();
  SparsaState s;
  s.z = CodeBatch::zeros(problem.atoms(), m);
  s.z_prev = s.z;
  s.alpha = Vector::Ones(m);
  s.wz = Matrix::Zero(problem.dictionary.dim(), m);
  s.objective_window = Matrix::Constant(window, m, -std::numeric_limits<double>::infinity());
  for (Index j = 0; j < m; ++j) s.objective_window(0, j) = 0.5 * ordered_squared_norm(problem.signals.data().col(j));
  s.window_filled = 1;
  s.window_head = window > 1 ? 1 : 0;
  s.stalled.assign(static_cast<std::size_t>(m), 0);
  return s;
}

double SparsaState::window_max(Index column) const {
  return objective_window.col(column).head(window_filled).maxCoeff();
}

SparsaState sparsa_step(SparsaState state, const SparseCodingProblem& problem, const SolverConfig& config) {
  const Matrix& w = problem.dictionary.atoms();
  const Matrix& x = problem.signals.data();
  const Index m = problem.count();
  if (state.z.atoms() != w.cols() || state.z.count() != m || state.alpha.size() != m)
    throw DimensionError("sparsa_step: state does not conform to the problem");

  const double lambda = problem.lambda;
  const Matrix gradient = column_product(problem.dictionary.transposed(), state.wz - x);

  Matrix candidate(state.z.atoms(), m);
  for (Index j = 0; j < m; ++j) {
    const double a = state.alpha[j];
    candidate.col(j) = state.z.data().col(j) - gradient.col(j) / a;
    prox_inplace({lambda / a, problem.non_negative}, candidate.col(j));
  }
  Matrix w_candidate = column_product(w, candidate);

  const bool safeguard = state.steps_taken > 0;
  const double lipschitz = safeguard ? problem.dictionary.lipschitz().value : 0.0;
  Vector accepted(m);
  for (Index j = 0; j < m; ++j) {
    double obj = column_objective(w_candidate.col(j), x.col(j), candidate.col(j), lambda);
    if (safeguard) {
      const double bound = state.window_max(j);
      double a = state.alpha[j];
      for (int retry = 0; retry < config.sparsa_max_retries && obj > bound; ++retry) {
        a = std::min(2.0 * a, config.sparsa_alpha_max);
        candidate.col(j) = state.z.data().col(j) - gradient.col(j) / a;
        prox_inplace({lambda / a, problem.non_negative}, candidate.col(j));
        column_product(w, candidate.col(j), w_candidate.col(j));
        obj = column_objective(w_candidate.col(j), x.col(j), candidate.col(j), lambda);
      }
      if (obj > bound && lipschitz > a) {
        // Retries exhausted: fall back to the monotone step alpha = L, which
        // cannot raise the objective above the current (windowed) value.
        a = lipschitz;
        candidate.col(j) = state.z.data().col(j) - gradient.col(j) / a;
        prox_inplace({lambda / a, problem.non_negative}, candidate.col(j));
        column_product(w, candidate.col(j), w_candidate.col(j));
        obj = column_objective(w_candidate.col(j), x.col(j), candidate.col(j), lambda);
      }
    }
    accepted[j] = obj;
  }

  for (Index j = 0; j < m; ++j) {
    const double s_sq = ordered_squared_distance(candidate.col(j), state.z.data().col(j));
    if (s_sq == 0.0) {
      state.stalled[j] = 1;
      continue;
    }
    state.stalled[j] = 0;
    const double ws_sq = ordered_squared_distance(w_candidate.col(j), state.wz.col(j));
    state.alpha[j] = std::clamp(ws_sq / s_sq, config.sparsa_alpha_min, config.sparsa_alpha_max);
  }

  const int window = static_cast<int>(state.objective_window.rows());
  state.objective_window.row(state.window_head) = accepted.transpose();
  state.window_head = (state.window_head + 1) % window;
  state.window_filled = std::min(state.window_filled + 1, window);

  state.z_prev = std::move(state.z);
  state.z = CodeBatch(std::move(candidate));
  state.wz = std::move(w_candidate);
  ++state.steps_taken;
  return state;
}

}  // namespace sparsecode
