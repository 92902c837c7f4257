#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "sparsecode/pipeline.hpp"

namespace sparsecode {

PatchEncoder PatchEncoder::one_step(OneStepEncoder encoder) {
  Dictionary dictionary = encoder.dictionary();
  return PatchEncoder(std::move(dictionary), std::move(encoder));
}

PatchEncoder PatchEncoder::iterative(Dictionary dictionary, SolverConfig config, double lambda, bool non_negative) {
  config.validate();
  if (!(lambda >= 0.0)) throw ArgumentError("PatchEncoder: lambda must be non-negative");
  return PatchEncoder(std::move(dictionary), Iterative{config, lambda, non_negative});
}

SolveResult PatchEncoder::encode(const SignalBatch& whitened) const {
  if (const auto* one = std::get_if<OneStepEncoder>(&method_)) {
    const auto t0 = std::chrono::steady_clock::now();
    SolveResult out;
    out.codes = one->encode(whitened);
    TraceRecord record;
    record.iteration = 1;
    record.objective = std::numeric_limits<double>::quiet_NaN();
    record.reconstruction_error = std::numeric_limits<double>::quiet_NaN();
    record.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.trace.records.push_back(record);
    out.trace.termination = Termination::BudgetExhausted;
    return out;
  }
  const auto& it = std::get<Iterative>(method_);
  SparseCodingProblem problem(dictionary_, whitened, it.lambda, it.non_negative);
  return encode_batch(problem, it.config);
}

double PatchEncoder::prepare() const {
  const auto t0 = std::chrono::steady_clock::now();
  if (const auto* it = std::get_if<Iterative>(&method_)) {
    switch (it->config.algorithm) {
      case Algorithm::Fista: dictionary_.lipschitz(); break;
      case Algorithm::Admm: dictionary_.ridge_solver(*it->config.rho); break;
      case Algorithm::Blasso: dictionary_.gram(); break;
      case Algorithm::Sparsa: dictionary_.lipschitz(); break;
    }
  } else {
    const auto& one = std::get<OneStepEncoder>(method_);
    if (one.kind() == OneStepKind::FistaScaled) dictionary_.lipschitz();
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Vector pool_quadrants(const Matrix& codes, int grid_side) {
  if (grid_side < 1 || codes.cols() != static_cast<Index>(grid_side) * grid_side)
    throw DimensionError("pool_quadrants: codes must have grid_side^2 columns");
  const Index k = codes.rows();
  const int split = (grid_side + 1) / 2;
  Vector pooled = Vector::Zero(4 * k);
  for (int r = 0; r < grid_side; ++r)
    for (int c = 0; c < grid_side; ++c) {
      const int quadrant = (r < split ? 0 : 2) + (c < split ? 0 : 1);
      pooled.segment(quadrant * k, k) += codes.col(static_cast<Index>(r) * grid_side + c);
    }
  return pooled;
}

namespace {

// Encodes images [first, first + count) into columns of `features`.
Index encode_range(const ImageSet& images, std::size_t first, std::size_t count, const WhiteningTransform& whitening,
                   const PatchEncoder& encoder, const EncodeOptions& options, Matrix& features) {
  const int grid = kImageSide - options.patch_size + 1;
  const Index per_image = static_cast<Index>(grid) * grid;
  const int dim = options.patch_size * options.patch_size * kChannels;
  Matrix patches(dim, per_image * static_cast<Index>(count));
  for (std::size_t i = 0; i < count; ++i)
    patches.middleCols(static_cast<Index>(i) * per_image, per_image) =
        extract_patches_dense(images.images[first + i], options.patch_size, 1).data();
  normalize_patches_inplace(patches, options.eps_norm);
  whitening.apply_inplace(patches);
  SolveResult encoded = encoder.encode(SignalBatch(std::move(patches)));
  for (std::size_t i = 0; i < count; ++i)
    features.col(static_cast<Index>(first + i)) =
        pool_quadrants(encoded.codes.data().middleCols(static_cast<Index>(i) * per_image, per_image), grid);
  return encoded.trace.diverged_columns;
}

}  // namespace

ImageRepresentation encode_image(const Image& image, const WhiteningTransform& whitening, const PatchEncoder& encoder,
                                 const EncodeOptions& options) {
  ImageSet one;
  one.images.push_back(image);
  one.labels.push_back(0);
  EncodeOptions single = options;
  single.threads = 1;
  EncodedImages out = encode_images(one, whitening, encoder, single);
  return {out.features.col(0)};
}

EncodedImages encode_images(const ImageSet& images, const WhiteningTransform& whitening, const PatchEncoder& encoder,
                            const EncodeOptions& options) {
  if (options.images_per_chunk < 1) throw ArgumentError("encode_images: images_per_chunk must be positive");
  if (whitening.dim() != static_cast<Index>(options.patch_size) * options.patch_size * kChannels ||
      encoder.dictionary().dim() != whitening.dim())
    throw DimensionError("encode_images: whitening, dictionary and patch size disagree");

  EncodedImages out;
  out.features = Matrix::Zero(4 * encoder.atoms(), static_cast<Index>(images.size()));
  if (images.size() == 0) return out;
  encoder.prepare();

  const std::size_t chunk = static_cast<std::size_t>(options.images_per_chunk);
  const std::size_t chunks = (images.size() + chunk - 1) / chunk;
  unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, chunks));

  std::vector<Index> diverged(chunks, 0);
  auto work = [&](std::size_t c) {
    const std::size_t first = c * chunk;
    const std::size_t count = std::min(chunk, images.size() - first);
    diverged[c] = encode_range(images, first, count, whitening, encoder, options, out.features);
  };

  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) work(c);
  } else {
    // Chunk boundaries are fixed by images_per_chunk, so the output does not depend on scheduling.
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < chunks; c = next++) {
          try {
            work(c);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }
  for (Index d : diverged) out.diverged_columns += d;
  return out;
}

}  // namespace sparsecode
