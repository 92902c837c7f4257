#include "sparsecode/prox.hpp"
#include "sparsecode/solvers.hpp"

namespace sparsecode {

AdmmState AdmmState::start(const SparseCodingProblem& problem, double rho) {
  AdmmState s;
  s.cached_solve = problem.dictionary.ridge_solver(rho);
  s.x = Matrix::Zero(problem.atoms(), problem.count());
  s.z = CodeBatch::zeros(problem.atoms(), problem.count());
  s.y = Matrix::Zero(problem.atoms(), problem.count());
  s.wtx = column_product(problem.dictionary.transposed(), problem.signals.data());
  return s;
}

AdmmState admm_step(AdmmState state, const SparseCodingProblem& problem, double rho) {
  if (!(rho > 0.0)) throw ArgumentError("admm_step: rho must be positive");
  if (!state.cached_solve) throw StateError("admm_step: factorization not prepared");
  if (state.cached_solve->rho() != rho) throw StateError("admm_step: factorization prepared for a different rho");
  if (state.wtx.rows() != problem.atoms() || state.wtx.cols() != problem.count())
    throw DimensionError("admm_step: state does not conform to the problem");

  // Scaled-form x-update: argmin_x 1/2||Wx - X||^2 + y^T(x - z) + rho/2 ||x - z||^2.
  Matrix rhs = state.wtx + rho * state.z.data() - state.y;
  state.x = state.cached_solve->apply(rhs);

  Matrix z = state.x + state.y / rho;
  prox_inplace({problem.lambda / rho, problem.non_negative}, z);
  state.y.noalias() += rho * (state.x - z);
  state.z = CodeBatch(std::move(z));
  return state;
}

}  // namespace sparsecode
