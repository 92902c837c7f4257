#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "sparsecode/core.hpp"
#include "sparsecode/onestep.hpp"
#include "sparsecode/solvers.hpp"

namespace sparsecode {

inline constexpr int kImageSide = 32;
inline constexpr int kChannels = 3;
inline constexpr int kImageBytes = kImageSide * kImageSide * kChannels;

/// 32x32 RGB image, 8 bits per channel, stored row-major with interleaved
/// channels: pixel (r, c, ch) lives at (r * 32 + c) * 3 + ch.
struct Image {
  std::array<std::uint8_t, kImageBytes> pixels{};

  std::uint8_t at(int row, int col, int channel) const {
    return pixels[static_cast<std::size_t>((row * kImageSide + col) * kChannels + channel)];
  }
};

struct ImageSet {
  std::vector<Image> images;
  std::vector<int> labels;  // class indices in [0, 10)

  std::size_t size() const noexcept { return images.size(); }
  /// Throws ArgumentError when the label count differs from the image count or a label is out of range.
  void validate() const;
  ImageSet subset(std::span<const std::size_t> indices) const;
};

// ---------------------------------------------------------------------------
// Patches

struct PatchExtraction {
  int patch_size = 6;
  int stride = 1;
  // Random sampling of `limit` patches (uniform image, uniform position) when
  // set; dense extraction of every position otherwise.
  std::optional<std::size_t> limit;
  std::uint64_t seed = 0;
};

/// Patches flattened to patch_size^2 * 3 vectors, channel-interleaved:
/// element (pr, pc, ch) at (pr * patch_size + pc) * 3 + ch. Dense mode emits
/// image by image, positions row-major.
SignalBatch extract_patches(const ImageSet& images, const PatchExtraction& options);
SignalBatch extract_patches_dense(const Image& image, int patch_size = 6, int stride = 1);

inline constexpr double kDefaultEpsNorm = 10.0;
inline constexpr double kDefaultEpsZca = 0.1;

/// Per column: (x - mean(x)) / sqrt(var(x) + eps_norm), population variance.
SignalBatch normalize_patches(SignalBatch batch, double eps_norm = kDefaultEpsNorm);
void normalize_patches_inplace(Matrix& batch, double eps_norm = kDefaultEpsNorm);

// ---------------------------------------------------------------------------
// ZCA whitening

struct WhiteningTransform {
  Vector mean;
  Matrix zca;  // symmetric
  std::optional<double> eps_zca;  // not stored in codebook files

  Index dim() const noexcept { return mean.size(); }
  Matrix apply(const Matrix& batch) const;
  void apply_inplace(Matrix& batch) const;
};

/// Covariance (1/N) of the centered library, Sigma = V D V^T,
/// zca = V (D + eps_zca I)^{-1/2} V^T. Needs at least dim() columns.
WhiteningTransform fit_whitening(const SignalBatch& library, double eps_zca = kDefaultEpsZca);

// ---------------------------------------------------------------------------
// K-means dictionary

struct KMeansResult {
  Matrix centroids;  // n x K, raw (not normalized)
  std::vector<Index> assignment;
  int iterations = 0;
  double distortion = 0.0;  // mean squared distance to the assigned centroid
};

/// Lloyd's algorithm from K distinct library columns drawn with `seed`. Empty
/// clusters are re-seeded with the point farthest from its centroid. Stops
/// early when assignments no longer change.
KMeansResult kmeans(const Matrix& points, Index k, int max_iterations, std::uint64_t seed);

struct Codebook {
  Dictionary dictionary;  // unit-norm atoms
  int kmeans_iters_run = 0;
};

Codebook train_codebook(const SignalBatch& whitened_library, Index k, int iterations, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Patch encoding and pooling

/// Either a closed-form one-step encoder or a budgeted iterative solver.
class PatchEncoder {
 public:
  static PatchEncoder one_step(OneStepEncoder encoder);
  static PatchEncoder iterative(Dictionary dictionary, SolverConfig config, double lambda, bool non_negative);

  /// One-step encoders report a single trace record.
  SolveResult encode(const SignalBatch& whitened) const;
  /// Computes cached factorizations and constants; returns the seconds spent.
  double prepare() const;

  const Dictionary& dictionary() const noexcept { return dictionary_; }
  Index atoms() const noexcept { return dictionary_.size(); }

 private:
  struct Iterative {
    SolverConfig config;
    double lambda;
    bool non_negative;
  };
  PatchEncoder(Dictionary dictionary, std::variant<OneStepEncoder, Iterative> method)
      : dictionary_(std::move(dictionary)), method_(std::move(method)) {}

  Dictionary dictionary_;
  std::variant<OneStepEncoder, Iterative> method_;
};

/// Sums codes over a 2x2 grid of the grid_side x grid_side patch positions
/// (columns in row-major position order). The first half gets the extra row and
/// column when grid_side is odd. Output: [top-left | top-right | bottom-left | bottom-right].
Vector pool_quadrants(const Matrix& codes, int grid_side);

struct ImageRepresentation {
  Vector features;  // 4K
};

struct EncodeOptions {
  double eps_norm = kDefaultEpsNorm;
  int patch_size = 6;
  int images_per_chunk = 16;
  // 0 = hardware concurrency. Results do not depend on the thread count.
  unsigned threads = 0;
};

ImageRepresentation encode_image(const Image& image, const WhiteningTransform& whitening,
                                 const PatchEncoder& encoder, const EncodeOptions& options = {});

struct EncodedImages {
  Matrix features;  // 4K x N, column i = image i
  Index diverged_columns = 0;
};

EncodedImages encode_images(const ImageSet& images, const WhiteningTransform& whitening,
                            const PatchEncoder& encoder, const EncodeOptions& options = {});

// ---------------------------------------------------------------------------
// Linear classifier (one-vs-rest ridge regression on {-1, +1} targets)

struct LinearClassifier {
  Matrix weights;  // C x (F + 1); last column is the bias
  double l2_penalty = 0.0;

  int num_classes() const noexcept { return static_cast<int>(weights.rows()); }
  /// C x N class scores for F x N features.
  Matrix scores(const Matrix& features) const;
  std::vector<int> predict(const Matrix& features) const;
};

/// Features are standardized internally and the scaling is folded back into
/// the weights. Minimizes (1/N) sum ||t - W f||^2 + l2_penalty ||W||^2 (bias
/// unpenalized). A failed factorization retries with the penalty raised 10x, up to
/// three times, then throws NumericalError.
LinearClassifier train_classifier(const Matrix& features, std::span<const int> labels, double l2_penalty);

double evaluate(const LinearClassifier& classifier, const Matrix& features, std::span<const int> labels);
double accuracy(std::span<const int> predicted, std::span<const int> labels);
Eigen::MatrixXi confusion_matrix(std::span<const int> predicted, std::span<const int> labels, int classes);

struct PenaltySelection {
  double penalty = 0.0;
  std::vector<double> grid;
  std::vector<double> holdout_accuracy;
};

/// Fits on the first (1 - holdout_fraction) of the samples and scores on the rest.
/// Ties go to the larger penalty.
PenaltySelection select_l2_penalty(const Matrix& features, std::span<const int> labels,
                                   std::span<const double> grid, double holdout_fraction = 0.2);

std::vector<double> default_penalty_grid();

}  // namespace sparsecode
