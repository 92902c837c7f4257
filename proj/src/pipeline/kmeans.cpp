#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "sparsecode/pipeline.hpp"

namespace sparsecode {

namespace {

constexpr Index kAssignChunk = 8192;

// Nearest centroid for every point; returns squared distances alongside.
void assign(const Matrix& points, const Matrix& centroids, std::vector<Index>& assignment, Vector& sq_dist) {
  const Vector centroid_norms = centroids.colwise().squaredNorm().transpose();
  for (Index first = 0; first < points.cols(); first += kAssignChunk) {
    const Index count = std::min(kAssignChunk, points.cols() - first);
    const auto block = points.middleCols(first, count);
    Matrix d = -2.0 * (centroids.transpose() * block);
    d.colwise() += centroid_norms;
    for (Index j = 0; j < count; ++j) {
      Index best = 0;
      const double value = d.col(j).minCoeff(&best);
      assignment[static_cast<std::size_t>(first + j)] = best;
      sq_dist[first + j] = std::max(0.0, value + block.col(j).squaredNorm());
    }
  }
}

}  // namespace

KMeansResult kmeans(const Matrix& points, Index k, int max_iterations, std::uint64_t seed) {
  const Index n_points = points.cols();
  if (k < 1) throw ArgumentError("kmeans: K must be positive");
  if (k > n_points) throw ArgumentError("kmeans: K exceeds the number of points");
  if (max_iterations < 1) throw ArgumentError("kmeans: need at least one iteration");

  KMeansResult out;
  std::mt19937_64 rng(seed);
  std::vector<Index> order(static_cast<std::size_t>(n_points));
  std::iota(order.begin(), order.end(), Index{0});
  // Partial Fisher-Yates: the first k entries are a uniform sample without replacement.
  for (Index i = 0; i < k; ++i) {
    std::uniform_int_distribution<Index> pick(i, n_points - 1);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  out.centroids.resize(points.rows(), k);
  for (Index c = 0; c < k; ++c) out.centroids.col(c) = points.col(order[static_cast<std::size_t>(c)]);

  out.assignment.assign(static_cast<std::size_t>(n_points), -1);
  std::vector<Index> next(static_cast<std::size_t>(n_points));
  Vector sq_dist(n_points);
  std::vector<Index> counts(static_cast<std::size_t>(k));

  for (int it = 1; it <= max_iterations; ++it) {
    assign(points, out.centroids, next, sq_dist);
    out.iterations = it;
    const bool unchanged = next == out.assignment;
    out.assignment = next;
    if (unchanged) break;

    Matrix sums = Matrix::Zero(points.rows(), k);
    std::fill(counts.begin(), counts.end(), 0);
    for (Index j = 0; j < n_points; ++j) {
      const Index c = out.assignment[static_cast<std::size_t>(j)];
      sums.col(c) += points.col(j);
      ++counts[static_cast<std::size_t>(c)];
    }
    std::vector<char> used(static_cast<std::size_t>(n_points), 0);
    for (Index c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        out.centroids.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      // Empty cluster: move it onto the worst-represented point.
      Index farthest = -1;
      double worst = -1.0;
      for (Index j = 0; j < n_points; ++j)
        if (!used[static_cast<std::size_t>(j)] && sq_dist[j] > worst) {
          worst = sq_dist[j];
          farthest = j;
        }
      used[static_cast<std::size_t>(farthest)] = 1;
      sq_dist[farthest] = 0.0;
      out.centroids.col(c) = points.col(farthest);
    }
  }

  assign(points, out.centroids, out.assignment, sq_dist);
  out.distortion = sq_dist.mean();
  return out;
}

Codebook train_codebook(const SignalBatch& whitened_library, Index k, int iterations, std::uint64_t seed) {
  KMeansResult km = kmeans(whitened_library.data(), k, iterations, seed);
  Codebook book{Dictionary::normalized(std::move(km.centroids)), km.iterations};
  return book;
}

}  // namespace sparsecode
