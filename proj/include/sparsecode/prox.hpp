#pragma once

#include "sparsecode/core.hpp"

namespace sparsecode {

// Proximal operators of t*||.||_1 and t*||.||_1 + indicator(u >= 0).
// Ties |v| == t map to exactly 0.

struct ProxSpec {
  double threshold = 0.0;
  bool non_negative = false;
};

/// sign(v) * max(0, |v| - t), elementwise.
Matrix soft_threshold(const Matrix& v, double t);
/// max(0, v - t), elementwise.
Matrix nonneg_soft_threshold(const Matrix& v, double t);
Matrix prox(const ProxSpec& spec, const Matrix& v);

// In-place variants; same semantics.
void soft_threshold_inplace(Eigen::Ref<Matrix> v, double t);
void nonneg_soft_threshold_inplace(Eigen::Ref<Matrix> v, double t);
void prox_inplace(const ProxSpec& spec, Eigen::Ref<Matrix> v);

}  // namespace sparsecode
