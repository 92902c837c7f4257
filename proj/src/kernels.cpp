#include <cmath>

#include "sparsecode/core.hpp"

// The library is built with floating-point contraction disabled, so vectorized
// loop bodies and their scalar remainders round identically.

namespace sparsecode {

namespace {

void accumulate(const double* __restrict a, double b, double* __restrict c, Index rows) {
  for (Index r = 0; r < rows; ++r) c[r] += a[r] * b;
}

void accumulate4(const double* __restrict a, const double* b, double* __restrict c0, double* __restrict c1,
                 double* __restrict c2, double* __restrict c3, Index rows) {
  const double b0 = b[0], b1 = b[1], b2 = b[2], b3 = b[3];
  for (Index r = 0; r < rows; ++r) {
    const double v = a[r];
    c0[r] += v * b0;
    c1[r] += v * b1;
    c2[r] += v * b2;
    c3[r] += v * b3;
  }
}

}  // namespace

void column_product(const Matrix& a, const Eigen::Ref<const Matrix>& b, Eigen::Ref<Matrix> out) {
  const Index rows = a.rows();
  const Index inner = a.cols();
  const Index cols = b.cols();
  if (b.rows() != inner) throw DimensionError("column_product: inner dimensions differ");
  if (out.rows() != rows || out.cols() != cols) throw DimensionError("column_product: output has the wrong shape");
  out.setZero();
  Index j = 0;
  double coeffs[4];
  for (; j + 4 <= cols; j += 4) {
    double* c0 = &out(0, j);
    double* c1 = &out(0, j + 1);
    double* c2 = &out(0, j + 2);
    double* c3 = &out(0, j + 3);
    for (Index k = 0; k < inner; ++k) {
      for (int q = 0; q < 4; ++q) coeffs[q] = b(k, j + q);
      accumulate4(a.data() + k * rows, coeffs, c0, c1, c2, c3, rows);
    }
  }
  for (; j < cols; ++j) {
    double* c = &out(0, j);
    for (Index k = 0; k < inner; ++k) accumulate(a.data() + k * rows, b(k, j), c, rows);
  }
}

Matrix column_product(const Matrix& a, const Eigen::Ref<const Matrix>& b) {
  Matrix out(a.rows(), b.cols());
  column_product(a, b, out);
  return out;
}

double ordered_squared_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) throw DimensionError("ordered_squared_distance: sizes differ");
  double sum = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

double ordered_squared_norm(const Eigen::Ref<const Vector>& v) {
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) sum += v[i] * v[i];
  return sum;
}

double ordered_abs_sum(const Eigen::Ref<const Vector>& v) {
  double sum = 0.0;
  for (Index i = 0; i < v.size(); ++i) sum += std::abs(v[i]);
  return sum;
}

}  // namespace sparsecode
