#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "sparsecode/core.hpp"

namespace sparsecode {

enum class Algorithm { Fista, Sparsa, Admm, Blasso };

std::string_view to_string(Algorithm algorithm);
/// Case-insensitive: "fista", "sparsa", "admm", "blasso".
Algorithm parse_algorithm(std::string_view name);

struct SolverConfig {
  Algorithm algorithm = Algorithm::Fista;
  int max_iterations = 100;
  std::optional<double> rho;      // ADMM only
  std::optional<double> epsilon;  // BLasso only
  // Per-column stop when ||z_{t+1} - z_t||_inf / max(1, ||z_t||_inf) < convergence_tol.
  double convergence_tol = 1e-6;
  int sparsa_window = 5;
  double sparsa_alpha_min = 1e-30;
  double sparsa_alpha_max = 1e30;
  int sparsa_max_retries = 10;
  std::optional<double> blasso_xi;  // defaults to epsilon^2
  // Objective and reconstruction error per iteration cost one extra product;
  // switch off for timing runs.
  bool trace_objective = true;

  static SolverConfig fista(int max_iterations);
  static SolverConfig sparsa(int max_iterations);
  static SolverConfig admm(double rho, int max_iterations);
  static SolverConfig blasso(double epsilon, int max_iterations);

  /// Throws ArgumentError when a field is out of range or an algorithm-specific
  /// parameter is missing or supplied to the wrong algorithm.
  void validate() const;
  double xi() const { return blasso_xi.value_or(epsilon.value_or(0.0) * epsilon.value_or(0.0)); }
};

// ---------------------------------------------------------------------------
// FISTA

struct FistaState {
  CodeBatch z;
  CodeBatch z_prev;
  Matrix y;         // momentum iterate
  double k = 1.0;   // momentum scalar, k >= 1 and strictly increasing

  static FistaState start(const SparseCodingProblem& problem);
};

/// z = prox_{lambda/L}(y - W^T(W y - X) / L); k' = (1 + sqrt(1 + 4k^2)) / 2;
/// y' = z + ((k - 1) / k')(z - z_prev). With k = 1 the first step is plain
/// proximal gradient.
FistaState fista_step(FistaState state, const SparseCodingProblem& problem, double lipschitz);

// ---------------------------------------------------------------------------
// SpaRSA (Barzilai-Borwein step with a non-monotone objective window)

struct SparsaState {
  CodeBatch z;
  CodeBatch z_prev;
  Vector alpha;            // BB scalar per column, in [alpha_min, alpha_max]
  Matrix objective_window; // window x m ring buffer of accepted objectives
  int window_filled = 0;
  int window_head = 0;     // slot the next objective is written to
  Matrix wz;               // W z, reused by the next gradient and BB update
  std::vector<char> stalled;  // s == 0 on the last step
  int steps_taken = 0;

  static SparsaState start(const SparseCodingProblem& problem, int window);
  double window_max(Index column) const;
};

/// One SpaRSA iteration. The first step uses alpha = 1 and is taken as is; later
/// steps whose objective exceeds the window maximum are retried with alpha doubled
/// (at most config.sparsa_max_retries times). A step still above the window after
/// that is recomputed with alpha = L and accepted.
SparsaState sparsa_step(SparsaState state, const SparseCodingProblem& problem,
                        const SolverConfig& config);

// ---------------------------------------------------------------------------
// ADMM

struct AdmmState {
  Matrix x;    // primal
  CodeBatch z; // split variable
  Matrix y;    // dual
  std::shared_ptr<const RidgeSolver> cached_solve;
  Matrix wtx;  // W^T X

  static AdmmState start(const SparseCodingProblem& problem, double rho);
};

/// x = (W^T W + rho I)^{-1}(W^T X + rho z - y); z = prox_{lambda/rho}(x + y/rho);
/// y = y + rho (x - z).
AdmmState admm_step(AdmmState state, const SparseCodingProblem& problem, double rho);

// ---------------------------------------------------------------------------
// BLasso

struct BlassoState {
  CodeBatch z;
  Vector l1_budget;        // ||z_j||_1
  Vector current_lambda;   // internal regularization estimate (+inf before the first step)
  Matrix correlation;      // W^T (X - W z)
  Vector loss;             // 1/2 ||x_j - W z_j||^2
  std::vector<char> finished;
  std::vector<char> last_was_backward;

  static BlassoState start(const SparseCodingProblem& problem);
};

/// One BLasso step per unfinished column: a backward step (shrinking one active
/// coordinate by epsilon) when it lowers the penalized loss by more than xi,
/// otherwise the best forward step of size epsilon. A column finishes once its
/// internal lambda drops to problem.lambda or below.
BlassoState blasso_step(BlassoState state, const SparseCodingProblem& problem, double epsilon,
                        double xi);

// ---------------------------------------------------------------------------

/// One proximal gradient step of arbitrary size from z:
/// prox_{step*lambda}(z - step * W^T (W z - X)).
CodeBatch proximal_gradient_step(const SparseCodingProblem& problem, const CodeBatch& z,
                                 double step);

struct SolveResult {
  CodeBatch codes;
  SolverTrace trace;
};

/// Runs the configured algorithm from z = 0 (and y = 0 for ADMM), batched over
/// all columns. Converged or diverged columns are
/// frozen individually, so every column matches an independent single-column run.
SolveResult solve(const SparseCodingProblem& problem, const SolverConfig& config);
SolveResult encode_batch(const SparseCodingProblem& problem, const SolverConfig& config);

/// Reference path: solves every column as its own problem.
SolveResult solve_columnwise(const SparseCodingProblem& problem, const SolverConfig& config);

}  // namespace sparsecode
