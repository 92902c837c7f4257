#include "sparsecode/prox.hpp"

#include <cmath>

namespace sparsecode {

namespace {

void check_threshold(double t) {
  if (!(t >= 0.0)) throw ArgumentError("prox: threshold must be non-negative");
}

}  // namespace

void soft_threshold_inplace(Eigen::Ref<Matrix> v, double t) {
  check_threshold(t);
  v = v.unaryExpr([t](double x) {
    const double mag = std::abs(x) - t;
    return mag > 0.0 ? std::copysign(mag, x) : 0.0;
  });
}

void nonneg_soft_threshold_inplace(Eigen::Ref<Matrix> v, double t) {
  check_threshold(t);
  v = v.unaryExpr([t](double x) {
    const double shifted = x - t;
    return shifted > 0.0 ? shifted : 0.0;
  });
}

void prox_inplace(const ProxSpec& spec, Eigen::Ref<Matrix> v) {
  if (spec.non_negative)
    nonneg_soft_threshold_inplace(v, spec.threshold);
  else
    soft_threshold_inplace(v, spec.threshold);
}

Matrix soft_threshold(const Matrix& v, double t) {
  Matrix out = v;
  soft_threshold_inplace(out, t);
  return out;
}

Matrix nonneg_soft_threshold(const Matrix& v, double t) {
  Matrix out = v;
  nonneg_soft_threshold_inplace(out, t);
  return out;
}

Matrix prox(const ProxSpec& spec, const Matrix& v) {
  Matrix out = v;
  prox_inplace(spec, out);
  return out;
}

}  // namespace sparsecode
