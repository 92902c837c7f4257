#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sparsecode/pipeline.hpp"

namespace sparsecode {

// Codebook artifact layout (all little-endian):
//   "PXC1" | u32 n | u32 K | f64 mean[n] | f64 zca[n*n] row-major | f64 atoms[n*K] row-major

struct CodebookArtifact {
  WhiteningTransform whitening;
  Dictionary dictionary;
};

std::vector<std::uint8_t> serialize_codebook(const WhiteningTransform& whitening, const Dictionary& dictionary);
/// Throws FormatError on a bad magic, truncated payload or trailing bytes.
CodebookArtifact parse_codebook(std::span<const std::uint8_t> bytes);

void save_codebook(const std::filesystem::path& path, const WhiteningTransform& whitening,
                   const Dictionary& dictionary);
CodebookArtifact load_codebook(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t file_checksum(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace sparsecode
