#include <cmath>

#include "sparsecode/pipeline.hpp"

namespace sparsecode {

WhiteningTransform fit_whitening(const SignalBatch& library, double eps_zca) {
  if (!(eps_zca > 0.0)) throw ArgumentError("fit_whitening: eps_zca must be positive");
  const Matrix& x = library.data();
  if (x.cols() < x.rows()) throw ArgumentError("fit_whitening: library needs at least as many patches as dimensions");

  WhiteningTransform t;
  t.eps_zca = eps_zca;
  t.mean = x.rowwise().mean();
  Matrix centered = x.colwise() - t.mean;
  Matrix covariance = Matrix::Zero(x.rows(), x.rows());
  covariance.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  covariance = covariance.selfadjointView<Eigen::Lower>();
  covariance /= static_cast<double>(x.cols());

  Eigen::SelfAdjointEigenSolver<Matrix> eig(covariance);
  if (eig.info() != Eigen::Success) throw NumericalError("fit_whitening: eigendecomposition failed");
  const Vector inv_sqrt = (eig.eigenvalues().array().max(0.0) + eps_zca).rsqrt();
  t.zca = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  t.zca = 0.5 * (t.zca + t.zca.transpose()).eval();
  return t;
}

void WhiteningTransform::apply_inplace(Matrix& batch) const {
  if (batch.rows() != mean.size()) throw DimensionError("WhiteningTransform: dimension mismatch");
  batch.colwise() -= mean;
  batch = zca * batch;
}

Matrix WhiteningTransform::apply(const Matrix& batch) const {
  Matrix out = batch;
  apply_inplace(out);
  return out;
}

}  // namespace sparsecode
