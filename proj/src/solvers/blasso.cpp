#include <cmath>
#include <limits>

#include "sparsecode/solvers.hpp"

namespace sparsecode {

BlassoState BlassoState::start(const SparseCodingProblem& problem) {
  const Index m = problem.count();
  BlassoState s;
  s.z = CodeBatch::zeros(problem.atoms(), m);
  s.l1_budget = Vector::Zero(m);
  s.current_lambda = Vector::Constant(m, std::numeric_limits<double>::infinity());
  s.correlation = column_product(problem.dictionary.transposed(), problem.signals.data());
  s.loss.resize(problem.count());
  for (Index j = 0; j < problem.count(); ++j) s.loss[j] = 0.5 * ordered_squared_norm(problem.signals.data().col(j));
  s.finished.assign(static_cast<std::size_t>(m), 0);
  s.last_was_backward.assign(static_cast<std::size_t>(m), 0);
  return s;
}

namespace {

struct Move {
  Index coordinate = -1;
  double delta = 0.0;       // signed change of z_coordinate
  double loss_change = 0.0; // L(z + delta e_c) - L(z)
};

// L(z + d e_c) - L(z) = -d c_c + d^2 G_cc / 2 where c = W^T (x - W z).
Move best_forward(const Eigen::Ref<const Vector>& corr, const Eigen::Ref<const Vector>& gram_diag,
                  double eps, bool non_negative) {
  Move best;
  best.loss_change = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < corr.size(); ++c) {
    const double d = non_negative ? eps : (corr[c] >= 0.0 ? eps : -eps);
    const double change = -d * corr[c] + 0.5 * eps * eps * gram_diag[c];
    if (change < best.loss_change) best = {c, d, change};
  }
  return best;
}

Move best_backward(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& corr,
                   const Eigen::Ref<const Vector>& gram_diag, double eps) {
  Move best;
  best.loss_change = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < z.size(); ++c) {
    if (z[c] == 0.0) continue;
    const double d = z[c] > 0.0 ? -eps : eps;
    const double change = -d * corr[c] + 0.5 * eps * eps * gram_diag[c];
    if (change < best.loss_change) best = {c, d, change};
  }
  return best;
}

}  // namespace

BlassoState blasso_step(BlassoState state, const SparseCodingProblem& problem, double epsilon, double xi) {
  if (!(epsilon > 0.0)) throw ArgumentError("blasso_step: epsilon must be positive");
  if (!(xi >= 0.0)) throw ArgumentError("blasso_step: xi must be non-negative");
  const Index m = problem.count();
  if (state.z.atoms() != problem.atoms() || state.z.count() != m)
    throw DimensionError("blasso_step: state does not conform to the problem");

  const Matrix& gram = problem.dictionary.gram();
  const Vector gram_diag = gram.diagonal();
  const double target = problem.lambda;

  for (Index j = 0; j < m; ++j) {
    if (state.finished[j]) continue;
    auto z = state.z.data().col(j);
    auto corr = state.correlation.col(j);
    double& lambda = state.current_lambda[j];

    Move move;
    bool backward = false;
    if (std::isfinite(lambda)) {
      move = best_backward(z, corr, gram_diag, epsilon);
      // Penalized change: the l1 norm shrinks by epsilon.
      backward = move.coordinate >= 0 && move.loss_change - lambda * epsilon < -xi;
    }
    if (!backward) {
      move = best_forward(corr, gram_diag, epsilon, problem.non_negative);
      const double reduction = -move.loss_change;
      if (!std::isfinite(lambda)) {
        if (!(reduction > 0.0)) {
          // z = 0 already minimizes the loss along every admissible direction.
          state.finished[j] = 1;
          lambda = 0.0;
          continue;
        }
        lambda = reduction / epsilon;
      } else {
        lambda = std::min(lambda, (reduction - xi) / epsilon);
      }
    }

    const Index c = move.coordinate;
    const double old_value = z[c];
    double new_value = old_value + move.delta;
    // Iterates live on the epsilon grid; snap round-off back to an exact zero.
    if (std::abs(new_value) < 0.5 * epsilon) new_value = 0.0;
    const double applied = new_value - old_value;
    state.loss[j] += -applied * corr[c] + 0.5 * applied * applied * gram_diag[c];
    corr.noalias() -= applied * gram.col(c);
    z[c] = new_value;
    state.l1_budget[j] += std::abs(new_value) - std::abs(old_value);
    state.last_was_backward[j] = backward ? 1 : 0;

    if (lambda <= target) state.finished[j] = 1;
  }
  return state;
}

}  // namespace sparsecode
