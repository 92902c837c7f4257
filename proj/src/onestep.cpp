#include "sparsecode/onestep.hpp"

#include <cmath>

#include "sparsecode/prox.hpp"

namespace sparsecode {

namespace {

void check_shapes(const Dictionary& dictionary, const SignalBatch& signals) {
  if (dictionary.dim() != signals.dim())
    throw DimensionError("encoder: dictionary rows must equal the signal dimension");
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("encoder: lambda must be non-negative");
}

// ||x - w_k||^2 for every atom/column pair, via ||x||^2 + ||w||^2 - 2 w^T x clamped at 0.
Matrix squared_distances(const Dictionary& dictionary, const SignalBatch& signals) {
  const Matrix& w = dictionary.atoms();
  const Matrix& x = signals.data();
  Matrix d = -2.0 * (w.transpose() * x);
  d.colwise() += w.colwise().squaredNorm().transpose();
  d.rowwise() += x.colwise().squaredNorm();
  return d.cwiseMax(0.0);
}

}  // namespace

CodeBatch encode_soft_threshold(const Dictionary& dictionary, const SignalBatch& signals, double lambda,
                                bool non_negative) {
  check_shapes(dictionary, signals);
  check_lambda(lambda);
  Matrix z = column_product(dictionary.transposed(), signals.data());
  prox_inplace({lambda, non_negative}, z);
  return CodeBatch(std::move(z));
}

CodeBatch encode_fista_onestep(const Dictionary& dictionary, const SignalBatch& signals, double lambda,
                               bool non_negative) {
  const LipschitzEstimate& lip = dictionary.lipschitz();
  if (lip.degenerate) throw ArgumentError("encode_fista_onestep: Lipschitz constant is zero");
  CodeBatch z = encode_soft_threshold(dictionary, signals, lambda, non_negative);
  z.data() /= lip.value;
  return z;
}

Matrix admm_onestep_operator(const Dictionary& dictionary, double rho) {
  return dictionary.ridge_solver(rho)->apply(dictionary.atoms().transpose());
}

CodeBatch encode_triangle(const Dictionary& dictionary, const SignalBatch& signals) {
  check_shapes(dictionary, signals);
  Matrix d = squared_distances(dictionary, signals).cwiseSqrt();
  const Eigen::RowVectorXd mu = d.colwise().mean();
  Matrix z = (-d).rowwise() + mu;
  return CodeBatch(z.cwiseMax(0.0));
}

CodeBatch encode_triangle_squared(const Dictionary& dictionary, const SignalBatch& signals) {
  check_shapes(dictionary, signals);
  Matrix d = squared_distances(dictionary, signals);
  const Eigen::RowVectorXd mu = d.colwise().mean();
  Matrix z = (-d).rowwise() + mu;
  return CodeBatch(z.cwiseMax(0.0));
}

Dictionary split_dictionary(const Dictionary& dictionary) {
  const Matrix& w = dictionary.atoms();
  Matrix split(w.rows(), 2 * w.cols());
  split << w, -w;
  return Dictionary(std::move(split));
}

std::string_view to_string(OneStepKind kind) {
  switch (kind) {
    case OneStepKind::SoftThreshold: return "soft_threshold";
    case OneStepKind::FistaScaled: return "fista_onestep";
    case OneStepKind::AdmmOneStep: return "admm_onestep";
    case OneStepKind::Triangle: return "triangle";
    case OneStepKind::TriangleSquared: return "triangle_squared";
  }
  return "unknown";
}

OneStepEncoder OneStepEncoder::soft_threshold(Dictionary dictionary, double lambda, bool non_negative) {
  check_lambda(lambda);
  OneStepEncoder e(OneStepKind::SoftThreshold, std::move(dictionary));
  e.lambda_ = lambda;
  e.non_negative_ = non_negative;
  return e;
}

OneStepEncoder OneStepEncoder::fista_scaled(Dictionary dictionary, double lambda, bool non_negative) {
  check_lambda(lambda);
  if (dictionary.lipschitz().degenerate) throw ArgumentError("fista_scaled: Lipschitz constant is zero");
  OneStepEncoder e(OneStepKind::FistaScaled, std::move(dictionary));
  e.lambda_ = lambda;
  e.non_negative_ = non_negative;
  return e;
}

OneStepEncoder OneStepEncoder::admm(Dictionary dictionary, double lambda, double rho, bool non_negative) {
  check_lambda(lambda);
  OneStepEncoder e(OneStepKind::AdmmOneStep, std::move(dictionary));
  e.lambda_ = lambda;
  e.rho_ = rho;
  e.non_negative_ = non_negative;
  e.precomputed_ = admm_onestep_operator(e.dictionary_, rho);
  return e;
}

OneStepEncoder OneStepEncoder::triangle(Dictionary dictionary) {
  return OneStepEncoder(OneStepKind::Triangle, std::move(dictionary));
}

OneStepEncoder OneStepEncoder::triangle_squared(Dictionary dictionary) {
  OneStepEncoder e(OneStepKind::TriangleSquared, std::move(dictionary));
  e.identity_warning_ = !e.dictionary_.unit_norm();
  return e;
}

CodeBatch encode_admm_onestep(const OneStepEncoder& encoder, const SignalBatch& signals) {
  if (!encoder.precomputed_ || !encoder.rho_) throw StateError("encode_admm_onestep: operator not precomputed");
  check_shapes(encoder.dictionary_, signals);
  Matrix z = column_product(*encoder.precomputed_, signals.data());
  prox_inplace({encoder.lambda_ / *encoder.rho_, encoder.non_negative_}, z);
  return CodeBatch(std::move(z));
}

CodeBatch OneStepEncoder::encode(const SignalBatch& signals) const {
  switch (kind_) {
    case OneStepKind::SoftThreshold: return encode_soft_threshold(dictionary_, signals, lambda_, non_negative_);
    case OneStepKind::FistaScaled: return encode_fista_onestep(dictionary_, signals, lambda_, non_negative_);
    case OneStepKind::AdmmOneStep: return encode_admm_onestep(*this, signals);
    case OneStepKind::Triangle: return encode_triangle(dictionary_, signals);
    case OneStepKind::TriangleSquared: return encode_triangle_squared(dictionary_, signals);
  }
  throw StateError("OneStepEncoder: unknown kind");
}

}  // namespace sparsecode
