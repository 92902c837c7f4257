#include <algorithm>
#include <cmath>

#include "sparsecode/pipeline.hpp"

namespace sparsecode {

namespace {

void check_labels(const Matrix& features, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != features.cols())
    throw DimensionError("classifier: one label per feature column required");
  for (int label : labels)
    if (label < 0) throw ArgumentError("classifier: labels must be non-negative");
}

}  // namespace

LinearClassifier train_classifier(const Matrix& features, std::span<const int> labels, double l2_penalty) {
  check_labels(features, labels);
  if (features.cols() == 0) throw ArgumentError("train_classifier: no samples");
  if (!(l2_penalty > 0.0)) throw ArgumentError("train_classifier: l2_penalty must be positive");
  const Index f = features.rows();
  const Index n = features.cols();
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;

  const Vector mean = features.rowwise().mean();
  Vector scale = ((features.colwise() - mean).rowwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt();
  for (Index i = 0; i < f; ++i)
    if (!(scale[i] > 0.0)) scale[i] = 1.0;

  // Standardized design with a trailing bias row, samples as columns.
  Matrix design(f + 1, n);
  design.topRows(f) = (features.colwise() - mean).array().colwise() / scale.array();
  design.row(f).setOnes();

  Matrix targets = Matrix::Constant(classes, n, -1.0);
  for (Index j = 0; j < n; ++j) targets(labels[static_cast<std::size_t>(j)], j) = 1.0;

  Matrix gram = Matrix::Zero(f + 1, f + 1);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(design, 1.0 / static_cast<double>(n));
  gram = gram.selfadjointView<Eigen::Lower>();
  const Matrix rhs = design * targets.transpose() / static_cast<double>(n);

  double penalty = l2_penalty;
  for (int attempt = 0; attempt <= 3; ++attempt, penalty *= 10.0) {
    Matrix system = gram;
    system.diagonal().head(f).array() += penalty;
    Eigen::LLT<Matrix> llt(system);
    if (llt.info() != Eigen::Success) continue;
    const Matrix solution = llt.solve(rhs);  // (F + 1) x C
    if (!solution.allFinite()) continue;

    LinearClassifier out;
    out.l2_penalty = penalty;
    out.weights.resize(classes, f + 1);
    const Matrix w = solution.topRows(f).transpose();  // C x F, standardized space
    out.weights.leftCols(f) = w.array().rowwise() / scale.transpose().array();
    out.weights.col(f) = solution.row(f).transpose() - out.weights.leftCols(f) * mean;
    return out;
  }
  throw NumericalError("train_classifier: normal equations are singular");
}

Matrix LinearClassifier::scores(const Matrix& features) const {
  const Index f = weights.cols() - 1;
  if (features.rows() != f) throw DimensionError("LinearClassifier: feature dimension mismatch");
  Matrix s = weights.leftCols(f) * features;
  s.colwise() += weights.col(f);
  return s;
}

std::vector<int> LinearClassifier::predict(const Matrix& features) const {
  const Matrix s = scores(features);
  std::vector<int> out(static_cast<std::size_t>(s.cols()));
  for (Index j = 0; j < s.cols(); ++j) {
    Index best = 0;
    s.col(j).maxCoeff(&best);
    out[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) throw DimensionError("accuracy: length mismatch");
  if (labels.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predicted[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double evaluate(const LinearClassifier& classifier, const Matrix& features, std::span<const int> labels) {
  check_labels(features, labels);
  const std::vector<int> predicted = classifier.predict(features);
  return accuracy(predicted, labels);
}

Eigen::MatrixXi confusion_matrix(std::span<const int> predicted, std::span<const int> labels, int classes) {
  if (predicted.size() != labels.size()) throw DimensionError("confusion_matrix: length mismatch");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(classes, classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes || predicted[i] < 0 || predicted[i] >= classes)
      throw ArgumentError("confusion_matrix: class index out of range");
    ++m(labels[i], predicted[i]);
  }
  return m;
}

std::vector<double> default_penalty_grid() { return {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}; }

PenaltySelection select_l2_penalty(const Matrix& features, std::span<const int> labels, std::span<const double> grid,
                                   double holdout_fraction) {
  check_labels(features, labels);
  if (grid.empty()) throw ArgumentError("select_l2_penalty: empty grid");
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw ArgumentError("select_l2_penalty: holdout_fraction must be in (0, 1)");
  const Index n = features.cols();
  const Index holdout = std::max<Index>(1, static_cast<Index>(std::llround(holdout_fraction * static_cast<double>(n))));
  const Index fit = n - holdout;
  if (fit < 1) throw ArgumentError("select_l2_penalty: not enough samples to split");

  PenaltySelection out;
  out.grid.assign(grid.begin(), grid.end());
  double best = -1.0;
  for (double penalty : grid) {
    const LinearClassifier c = train_classifier(features.leftCols(fit), labels.first(static_cast<std::size_t>(fit)), penalty);
    const double acc = evaluate(c, features.rightCols(holdout), labels.last(static_cast<std::size_t>(holdout)));
    out.holdout_accuracy.push_back(acc);
    if (acc >= best) {
      best = acc;
      out.penalty = penalty;
    }
  }
  return out;
}

}  // namespace sparsecode
