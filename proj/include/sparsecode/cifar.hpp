#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "sparsecode/pipeline.hpp"

namespace sparsecode {

inline constexpr std::size_t kCifarRecordBytes = 1 + kImageBytes;

/// Parses concatenated CIFAR-10 records: one label byte, then 1024 red, 1024 green
/// and 1024 blue bytes, each plane row-major 32x32. `base_offset` is added to the
/// offsets reported in FormatError.
ImageSet parse_cifar10(std::span<const std::uint8_t> bytes, std::uint64_t base_offset = 0);

/// Reads every record of the listed files, in order, then keeps `count` images
/// drawn without replacement using `seed` (original order preserved). All images
/// when count is empty. ArgumentError when count exceeds the records available.
ImageSet load_cifar10(std::span<const std::filesystem::path> files, std::optional<std::size_t> count,
                      std::uint64_t seed);
/// `path` is a single batch file or a directory holding the standard training batches.
ImageSet load_cifar10(const std::filesystem::path& path, std::optional<std::size_t> count, std::uint64_t seed);

/// data_batch_1.bin .. data_batch_5.bin under `dir`.
std::vector<std::filesystem::path> cifar10_train_files(const std::filesystem::path& dir);
/// test_batch.bin under `dir`.
std::vector<std::filesystem::path> cifar10_test_files(const std::filesystem::path& dir);

std::vector<std::uint8_t> serialize_cifar10(const ImageSet& images);
void write_cifar10(const std::filesystem::path& path, const ImageSet& images);

}  // namespace sparsecode
