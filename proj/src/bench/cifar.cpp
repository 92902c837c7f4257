#include "sparsecode/cifar.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "sparsecode/codebook_io.hpp"

namespace sparsecode {

namespace fs = std::filesystem;

namespace {

constexpr int kPlane = kImageSide * kImageSide;

std::vector<std::size_t> choose(std::size_t total, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, total - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

ImageSet parse_cifar10(std::span<const std::uint8_t> bytes, std::uint64_t base_offset) {
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  if (bytes.size() % kCifarRecordBytes != 0)
    throw FormatError("CIFAR-10: truncated record", base_offset + records * kCifarRecordBytes);
  ImageSet out;
  out.images.resize(records);
  out.labels.resize(records);
  for (std::size_t i = 0; i < records; ++i) {
    const std::uint8_t* rec = bytes.data() + i * kCifarRecordBytes;
    if (rec[0] > 9) throw FormatError("CIFAR-10: label byte above 9", base_offset + i * kCifarRecordBytes);
    out.labels[i] = rec[0];
    auto& px = out.images[i].pixels;
    for (int ch = 0; ch < kChannels; ++ch)
      for (int p = 0; p < kPlane; ++p) px[static_cast<std::size_t>(p * kChannels + ch)] = rec[1 + ch * kPlane + p];
  }
  return out;
}

ImageSet load_cifar10(std::span<const fs::path> files, std::optional<std::size_t> count, std::uint64_t seed) {
  if (files.empty()) throw ArgumentError("load_cifar10: no files given");
  ImageSet all;
  for (const auto& file : files) {
    if (!fs::is_regular_file(file)) throw ArgumentError("load_cifar10: missing file " + file.string());
    ImageSet part = parse_cifar10(read_file(file));
    all.images.insert(all.images.end(), part.images.begin(), part.images.end());
    all.labels.insert(all.labels.end(), part.labels.begin(), part.labels.end());
  }
  if (!count) return all;
  if (*count > all.size()) throw ArgumentError("load_cifar10: requested more images than available");
  const auto idx = choose(all.size(), *count, seed);
  return all.subset(idx);
}

ImageSet load_cifar10(const fs::path& path, std::optional<std::size_t> count, std::uint64_t seed) {
  if (fs::is_directory(path)) {
    const auto files = cifar10_train_files(path);
    return load_cifar10(std::span<const fs::path>(files), count, seed);
  }
  const fs::path files[] = {path};
  return load_cifar10(std::span<const fs::path>(files), count, seed);
}

std::vector<fs::path> cifar10_train_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (int i = 1; i <= 5; ++i) files.push_back(dir / ("data_batch_" + std::to_string(i) + ".bin"));
  return files;
}

std::vector<fs::path> cifar10_test_files(const fs::path& dir) { return {dir / "test_batch.bin"}; }

std::vector<std::uint8_t> serialize_cifar10(const ImageSet& images) {
  images.validate();
  std::vector<std::uint8_t> out(images.size() * kCifarRecordBytes);
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::uint8_t* rec = out.data() + i * kCifarRecordBytes;
    rec[0] = static_cast<std::uint8_t>(images.labels[i]);
    const auto& px = images.images[i].pixels;
    for (int ch = 0; ch < kChannels; ++ch)
      for (int p = 0; p < kPlane; ++p) rec[1 + ch * kPlane + p] = px[static_cast<std::size_t>(p * kChannels + ch)];
  }
  return out;
}

void write_cifar10(const fs::path& path, const ImageSet& images) { write_file(path, serialize_cifar10(images)); }

}  // namespace sparsecode
