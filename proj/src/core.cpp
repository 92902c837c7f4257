#include "sparsecode/core.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>

namespace sparsecode {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ArgumentError(std::string(what) + " contains non-finite entries");
}

}  // namespace

SignalBatch::SignalBatch(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) throw ArgumentError("SignalBatch must be at least 1x1");
  require_finite(data_, "SignalBatch");
}

SignalBatch SignalBatch::columns(Index first, Index count) const {
  if (first < 0 || count < 1 || first + count > data_.cols())
    throw DimensionError("SignalBatch::columns: range out of bounds");
  return SignalBatch(data_.middleCols(first, count));
}

LipschitzEstimate estimate_lipschitz(const Matrix& atoms, int max_iterations, double relative_tol,
                                     std::uint64_t seed) {
  LipschitzEstimate out;
  if (atoms.size() == 0) throw ArgumentError("estimate_lipschitz: empty dictionary");
  if (atoms.squaredNorm() == 0.0) {
    out.degenerate = true;
    return out;
  }
  const bool use_outer = atoms.rows() <= atoms.cols();
  const Matrix gram = use_outer ? Matrix(atoms * atoms.transpose()) : Matrix(atoms.transpose() * atoms);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector v(gram.rows());
  for (Index i = 0; i < v.size(); ++i) v[i] = normal(rng);
  v.normalize();

  double estimate = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    Vector gv = gram * v;
    const double next = v.dot(gv);  // Rayleigh quotient
    const double norm = gv.norm();
    out.iterations = it;
    if (norm == 0.0) break;
    v = gv / norm;
    const bool done = it > 1 && std::abs(next - estimate) <= relative_tol * std::abs(next);
    estimate = next;
    if (done) break;
  }
  // A final Rayleigh quotient with the last direction is at least as good as the previous one.
  estimate = std::max(estimate, v.dot(gram * v));
  out.value = estimate;
  out.degenerate = !(estimate > 0.0);
  return out;
}

RidgeSolver::RidgeSolver(std::shared_ptr<const Matrix> atoms, double rho)
    : atoms_(std::move(atoms)), rho_(rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ArgumentError("RidgeSolver: rho must be positive");
  const Matrix& w = *atoms_;
  small_side_ = w.cols() > w.rows();
  Matrix system = small_side_ ? Matrix(w * w.transpose()) : Matrix(w.transpose() * w);
  system.diagonal().array() += rho;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) throw NumericalError("RidgeSolver: factorization failed");
  inverse_ = llt.solve(Matrix::Identity(system.rows(), system.cols()));
  inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
  if (small_side_) transposed_ = w.transpose();
}

Matrix RidgeSolver::apply(const Matrix& rhs) const {
  const Matrix& w = *atoms_;
  if (rhs.rows() != w.cols()) throw DimensionError("RidgeSolver::apply: rhs must have K rows");
  if (!small_side_) return column_product(inverse_, rhs);
  const Matrix inner = column_product(inverse_, column_product(w, rhs));
  Matrix out = rhs - column_product(transposed_, inner);
  out /= rho_;
  return out;
}

namespace detail {

struct DictionaryData {
  std::shared_ptr<const Matrix> atoms;
  Matrix transposed;
  bool unit_norm = false;

  std::once_flag lipschitz_once;
  LipschitzEstimate lipschitz;

  std::once_flag gram_once;
  Matrix gram;

  std::mutex ridge_mutex;
  std::map<double, std::shared_ptr<const RidgeSolver>> ridge;
};

}  // namespace detail

Dictionary::Dictionary(Matrix atoms) : data_(std::make_shared<detail::DictionaryData>()) {
  if (atoms.rows() < 1 || atoms.cols() < 1) throw ArgumentError("Dictionary must have at least one atom");
  require_finite(atoms, "Dictionary");
  const Vector norms = atoms.colwise().norm().transpose();
  data_->unit_norm = ((norms.array() - 1.0).abs() <= 1e-8).all();
  data_->transposed = atoms.transpose();
  data_->atoms = std::make_shared<const Matrix>(std::move(atoms));
}

Dictionary Dictionary::normalized(Matrix atoms) {
  for (Index k = 0; k < atoms.cols(); ++k) {
    const double norm = atoms.col(k).norm();
    if (norm > 0.0) atoms.col(k) /= norm;
  }
  return Dictionary(std::move(atoms));
}

const Matrix& Dictionary::atoms() const noexcept { return *data_->atoms; }
const Matrix& Dictionary::transposed() const noexcept { return data_->transposed; }
Index Dictionary::dim() const noexcept { return data_->atoms->rows(); }
Index Dictionary::size() const noexcept { return data_->atoms->cols(); }
bool Dictionary::unit_norm() const noexcept { return data_->unit_norm; }

const LipschitzEstimate& Dictionary::lipschitz() const {
  std::call_once(data_->lipschitz_once, [this] { data_->lipschitz = estimate_lipschitz(atoms()); });
  return data_->lipschitz;
}

const Matrix& Dictionary::gram() const {
  std::call_once(data_->gram_once, [this] { data_->gram = atoms().transpose() * atoms(); });
  return data_->gram;
}

std::shared_ptr<const RidgeSolver> Dictionary::ridge_solver(double rho) const {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ArgumentError("ridge_solver: rho must be positive");
  std::lock_guard lock(data_->ridge_mutex);
  auto& slot = data_->ridge[rho];
  if (!slot) slot = std::make_shared<const RidgeSolver>(data_->atoms, rho);
  return slot;
}

double lipschitz_constant(const Dictionary& dictionary) { return dictionary.lipschitz().value; }

SparseCodingProblem::SparseCodingProblem(Dictionary dictionary_, SignalBatch signals_, double lambda_,
                                         bool non_negative_)
    : dictionary(std::move(dictionary_)),
      signals(std::move(signals_)),
      lambda(lambda_),
      non_negative(non_negative_) {
  if (dictionary.dim() != signals.dim())
    throw DimensionError("SparseCodingProblem: dictionary rows must equal signal dimension");
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ArgumentError("SparseCodingProblem: lambda must be finite and non-negative");
}

Vector objective(const SparseCodingProblem& problem, const CodeBatch& codes) {
  if (codes.atoms() != problem.atoms() || codes.count() != problem.count())
    throw DimensionError("objective: codes do not conform to the problem");
  const Matrix residual = problem.dictionary.atoms() * codes.data() - problem.signals.data();
  Vector out = 0.5 * residual.colwise().squaredNorm().transpose() +
               problem.lambda * codes.data().cwiseAbs().colwise().sum().transpose();
  if (problem.non_negative) {
    for (Index j = 0; j < out.size(); ++j)
      if ((codes.data().col(j).array() < 0.0).any()) out[j] = std::numeric_limits<double>::infinity();
  }
  return out;
}

Vector reconstruction_error(const Dictionary& dictionary, const CodeBatch& codes,
                            const SignalBatch& signals) {
  if (codes.atoms() != dictionary.size() || dictionary.dim() != signals.dim() ||
      codes.count() != signals.count())
    throw DimensionError("reconstruction_error: shapes do not conform");
  return (dictionary.atoms() * codes.data() - signals.data()).colwise().norm().transpose();
}

double mean_reconstruction_error(const Dictionary& dictionary, const CodeBatch& codes,
                                 const SignalBatch& signals) {
  return reconstruction_error(dictionary, codes, signals).mean();
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::BudgetExhausted: return "budget_exhausted";
    case Termination::Converged: return "converged";
    case Termination::Diverged: return "diverged";
  }
  return "unknown";
}

}  // namespace sparsecode
