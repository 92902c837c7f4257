#include <cmath>
#include <random>

#include "sparsecode/pipeline.hpp"

namespace sparsecode {

void ImageSet::validate() const {
  if (labels.size() != images.size()) throw ArgumentError("ImageSet: label count differs from image count");
  for (int label : labels)
    if (label < 0 || label > 9) throw ArgumentError("ImageSet: label outside [0, 10)");
}

ImageSet ImageSet::subset(std::span<const std::size_t> indices) const {
  ImageSet out;
  out.images.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= images.size()) throw ArgumentError("ImageSet::subset: index out of range");
    out.images.push_back(images[i]);
    out.labels.push_back(labels[i]);
  }
  return out;
}

namespace {

void check_geometry(int patch_size, int stride) {
  if (patch_size < 1 || patch_size > kImageSide) throw ArgumentError("extract_patches: patch size must be in [1, 32]");
  if (stride < 1) throw ArgumentError("extract_patches: stride must be positive");
}

void copy_patch(const Image& image, int row, int col, int patch_size, double* out) {
  const int row_len = patch_size * kChannels;
  for (int pr = 0; pr < patch_size; ++pr) {
    const std::uint8_t* src = &image.pixels[static_cast<std::size_t>(((row + pr) * kImageSide + col) * kChannels)];
    for (int i = 0; i < row_len; ++i) out[pr * row_len + i] = src[i];
  }
}

}  // namespace

SignalBatch extract_patches_dense(const Image& image, int patch_size, int stride) {
  check_geometry(patch_size, stride);
  const int positions = (kImageSide - patch_size) / stride + 1;
  const int dim = patch_size * patch_size * kChannels;
  Matrix out(dim, positions * positions);
  Index column = 0;
  for (int r = 0; r < positions; ++r)
    for (int c = 0; c < positions; ++c) copy_patch(image, r * stride, c * stride, patch_size, out.col(column++).data());
  return SignalBatch(std::move(out));
}

SignalBatch extract_patches(const ImageSet& images, const PatchExtraction& options) {
  check_geometry(options.patch_size, options.stride);
  if (images.size() == 0) throw ArgumentError("extract_patches: empty image set");
  const int dim = options.patch_size * options.patch_size * kChannels;
  const int positions = (kImageSide - options.patch_size) / options.stride + 1;

  if (options.limit) {
    if (*options.limit == 0) throw ArgumentError("extract_patches: limit must be positive");
    std::mt19937_64 rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick_image(0, images.size() - 1);
    std::uniform_int_distribution<int> pick_position(0, positions - 1);
    Matrix out(dim, static_cast<Index>(*options.limit));
    for (Index j = 0; j < out.cols(); ++j) {
      const Image& image = images.images[pick_image(rng)];
      const int r = pick_position(rng) * options.stride;
      const int c = pick_position(rng) * options.stride;
      copy_patch(image, r, c, options.patch_size, out.col(j).data());
    }
    return SignalBatch(std::move(out));
  }

  const Index per_image = static_cast<Index>(positions) * positions;
  Matrix out(dim, per_image * static_cast<Index>(images.size()));
  for (std::size_t i = 0; i < images.size(); ++i)
    out.middleCols(static_cast<Index>(i) * per_image, per_image) =
        extract_patches_dense(images.images[i], options.patch_size, options.stride).data();
  return SignalBatch(std::move(out));
}

void normalize_patches_inplace(Matrix& batch, double eps_norm) {
  if (!(eps_norm >= 0.0)) throw ArgumentError("normalize_patches: eps_norm must be non-negative");
  const double n = static_cast<double>(batch.rows());
  for (Index j = 0; j < batch.cols(); ++j) {
    auto col = batch.col(j);
    const double mean = col.sum() / n;
    col.array() -= mean;
    const double var = col.squaredNorm() / n;
    const double scale = std::sqrt(var + eps_norm);
    if (scale > 0.0) col /= scale;
  }
}

SignalBatch normalize_patches(SignalBatch batch, double eps_norm) {
  Matrix data = std::move(batch).release();
  normalize_patches_inplace(data, eps_norm);
  return SignalBatch(std::move(data));
}

}  // namespace sparsecode
