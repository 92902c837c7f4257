#include <cmath>

#include "sparsecode/prox.hpp"
#include "sparsecode/solvers.hpp"

namespace sparsecode {

FistaState FistaState::start(const SparseCodingProblem& problem) {
  FistaState s;
  s.z = CodeBatch::zeros(problem.atoms(), problem.count());
  s.z_prev = s.z;
  s.y = s.z.data();
  s.k = 1.0;
  return s;
}

FistaState fista_step(FistaState state, const SparseCodingProblem& problem, double lipschitz) {
  if (!(lipschitz > 0.0)) throw ArgumentError("fista_step: Lipschitz constant must be positive");
  const Matrix& w = problem.dictionary.atoms();
  if (state.y.rows() != w.cols() || state.y.cols() != problem.count())
    throw DimensionError("fista_step: state does not conform to the problem");

  const double inv_l = 1.0 / lipschitz;
  Matrix residual = column_product(w, state.y);
  residual -= problem.signals.data();
  Matrix next = state.y;
  next -= inv_l * column_product(problem.dictionary.transposed(), residual);
  prox_inplace({problem.lambda * inv_l, problem.non_negative}, next);

  const double k_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * state.k * state.k));
  const double momentum = (state.k - 1.0) / k_next;
  state.y = next + momentum * (next - state.z.data());
  state.z_prev = std::move(state.z);
  state.z = CodeBatch(std::move(next));
  state.k = k_next;
  return state;
}

CodeBatch proximal_gradient_step(const SparseCodingProblem& problem, const CodeBatch& z, double step) {
  if (!(step > 0.0)) throw ArgumentError("proximal_gradient_step: step must be positive");
  const Matrix& w = problem.dictionary.atoms();
  if (z.atoms() != w.cols() || z.count() != problem.count())
    throw DimensionError("proximal_gradient_step: codes do not conform to the problem");
  const Matrix residual = column_product(w, z.data()) - problem.signals.data();
  Matrix next = z.data();
  next -= step * column_product(problem.dictionary.transposed(), residual);
  prox_inplace({problem.lambda * step, problem.non_negative}, next);
  return CodeBatch(std::move(next));
}

}  // namespace sparsecode
