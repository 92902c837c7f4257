#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "sparsecode/errors.hpp"

namespace sparsecode {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Input signals stored column-wise: n rows (signal dimension) by m columns
/// (one column per encoding problem). Entries are finite, n >= 1, m >= 1.
class SignalBatch {
 public:
  explicit SignalBatch(Matrix data);

  const Matrix& data() const noexcept { return data_; }
  Index dim() const noexcept { return data_.rows(); }
  Index count() const noexcept { return data_.cols(); }

  /// Columns [first, first + count) as a new batch.
  SignalBatch columns(Index first, Index count) const;
  Matrix release() && { return std::move(data_); }

 private:
  Matrix data_;
};

/// Codes z, K rows by m columns, column-aligned with the SignalBatch they encode.
class CodeBatch {
 public:
  CodeBatch() = default;
  explicit CodeBatch(Matrix data) : data_(std::move(data)) {}
  static CodeBatch zeros(Index atoms, Index count) { return CodeBatch(Matrix::Zero(atoms, count)); }

  const Matrix& data() const noexcept { return data_; }
  Matrix& data() noexcept { return data_; }
  Index atoms() const noexcept { return data_.rows(); }
  Index count() const noexcept { return data_.cols(); }

 private:
  Matrix data_;
};

struct LipschitzEstimate {
  double value = 0.0;
  int iterations = 0;
  // True when W is (numerically) zero; value is then 0.
  bool degenerate = false;
};

/// out = a * b, one column at a time with the inner sum taken in index order.
/// Column j of the result depends only on a and column j of b, so a batched
/// product matches single-column products bit for bit. out must not alias b.
void column_product(const Matrix& a, const Eigen::Ref<const Matrix>& b, Eigen::Ref<Matrix> out);
Matrix column_product(const Matrix& a, const Eigen::Ref<const Matrix>& b);

/// Reductions summed strictly in index order, independent of memory alignment.
double ordered_squared_distance(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);
double ordered_squared_norm(const Eigen::Ref<const Vector>& v);
double ordered_abs_sum(const Eigen::Ref<const Vector>& v);

/// Power iteration for the largest eigenvalue of W^T W. Works on whichever of
/// W^T W and W W^T is smaller; both share the top eigenvalue.
LipschitzEstimate estimate_lipschitz(const Matrix& atoms, int max_iterations = 1000,
                                     double relative_tol = 1e-9, std::uint64_t seed = 0x5eedULL);

/// Applies (W^T W + rho I)^{-1} to a block of right-hand sides using a factorization
/// computed once. When K > n the n x n system W W^T + rho I is factored and the
/// matrix-inversion identity (W^T W + rho I)^{-1} = (I - W^T (W W^T + rho I)^{-1} W) / rho
/// is applied instead of forming a K x K system.
class RidgeSolver {
 public:
  RidgeSolver(std::shared_ptr<const Matrix> atoms, double rho);
  RidgeSolver(const Matrix& atoms, double rho)
      : RidgeSolver(std::make_shared<const Matrix>(atoms), rho) {}

  Matrix apply(const Matrix& rhs) const;
  double rho() const noexcept { return rho_; }
  bool uses_inversion_identity() const noexcept { return small_side_; }

 private:
  std::shared_ptr<const Matrix> atoms_;
  double rho_;
  bool small_side_;
  Matrix transposed_;  // W^T, only with the inversion identity
  Matrix inverse_;     // (W W^T + rho I)^{-1} or (W^T W + rho I)^{-1}
};

namespace detail {
struct DictionaryData;
}

/// The dictionary W (n x K, one atom per column) with lazily computed, shared
/// derived quantities. Copies are cheap and share the immutable atoms and caches;
/// cached quantities are computed once even under concurrent first access.
class Dictionary {
 public:
  explicit Dictionary(Matrix atoms);

  const Matrix& atoms() const noexcept;
  Index dim() const noexcept;
  Index size() const noexcept;
  /// Every column norm within 1e-8 of 1.
  bool unit_norm() const noexcept;

  /// W^T stored column-major (K x n).
  const Matrix& transposed() const noexcept;
  const LipschitzEstimate& lipschitz() const;
  /// W^T W, K x K.
  const Matrix& gram() const;
  /// Cached factorization for (W^T W + rho I); throws ArgumentError for rho <= 0.
  std::shared_ptr<const RidgeSolver> ridge_solver(double rho) const;

  /// Atoms rescaled to unit norm (zero columns stay zero).
  static Dictionary normalized(Matrix atoms);

 private:
  std::shared_ptr<detail::DictionaryData> data_;
};

/// Largest eigenvalue of W^T W (cached on the dictionary). 0 for a zero dictionary;
/// check `dictionary.lipschitz().degenerate`.
double lipschitz_constant(const Dictionary& dictionary);

/// min_z 1/2 ||W z - x||^2 + lambda ||z||_1 (+ indicator of z >= 0), batched.
struct SparseCodingProblem {
  SparseCodingProblem(Dictionary dictionary, SignalBatch signals, double lambda,
                      bool non_negative = false);

  Dictionary dictionary;
  SignalBatch signals;
  double lambda;
  bool non_negative;

  Index atoms() const noexcept { return dictionary.size(); }
  Index count() const noexcept { return signals.count(); }
};

/// Per-column objective; +inf for columns violating the non-negativity constraint.
Vector objective(const SparseCodingProblem& problem, const CodeBatch& codes);
/// Per-column ||W z - x||_2.
Vector reconstruction_error(const Dictionary& dictionary, const CodeBatch& codes,
                            const SignalBatch& signals);
double mean_reconstruction_error(const Dictionary& dictionary, const CodeBatch& codes,
                                 const SignalBatch& signals);

enum class Termination { BudgetExhausted, Converged, Diverged };
std::string_view to_string(Termination t);

struct TraceRecord {
  int iteration = 0;
  double objective = 0.0;             // mean over columns; NaN when not traced
  double reconstruction_error = 0.0;  // mean over columns; NaN when not traced
  double seconds = 0.0;               // cumulative, excluding setup
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  Termination termination = Termination::BudgetExhausted;
  double setup_seconds = 0.0;
  Index converged_columns = 0;
  Index diverged_columns = 0;

  int iterations() const noexcept { return static_cast<int>(records.size()); }
  double iteration_seconds() const noexcept { return records.empty() ? 0.0 : records.back().seconds; }
};

}  // namespace sparsecode
