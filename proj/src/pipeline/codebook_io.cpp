#include "sparsecode/codebook_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sparsecode {

namespace {

constexpr std::uint8_t kMagic[4] = {'P', 'X', 'C', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw FormatError(std::string("codebook: truncated ") + what, pos_);
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f64() {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_codebook(const WhiteningTransform& whitening, const Dictionary& dictionary) {
  const Index n = whitening.dim();
  const Matrix& w = dictionary.atoms();
  if (whitening.zca.rows() != n || whitening.zca.cols() != n || w.rows() != n)
    throw DimensionError("serialize_codebook: whitening and dictionary dimensions disagree");
  std::vector<std::uint8_t> out;
  out.reserve(12 + 8 * static_cast<std::size_t>(n + n * n + n * w.cols()));
  for (std::uint8_t b : kMagic) out.push_back(b);
  put_u32(out, static_cast<std::uint32_t>(n));
  put_u32(out, static_cast<std::uint32_t>(w.cols()));
  for (Index i = 0; i < n; ++i) put_f64(out, whitening.mean[i]);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < n; ++c) put_f64(out, whitening.zca(r, c));
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
  return out;
}

CodebookArtifact parse_codebook(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  in.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("codebook: bad magic", 0);
  in.u32("magic");  // skip
  const std::uint32_t n = in.u32("header");
  const std::uint32_t k = in.u32("header");
  if (n == 0 || k == 0) throw FormatError("codebook: zero dimension in header", 4);
  const std::size_t values = static_cast<std::size_t>(n) + static_cast<std::size_t>(n) * n +
                             static_cast<std::size_t>(n) * k;
  in.need(8 * values, "payload");

  WhiteningTransform t;
  t.mean.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) t.mean[i] = in.f64();
  t.zca.resize(n, n);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < n; ++c) t.zca(r, c) = in.f64();
  Matrix atoms(n, k);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < k; ++c) atoms(r, c) = in.f64();
  if (in.pos() != in.size()) throw FormatError("codebook: trailing bytes", in.pos());
  if (!t.mean.allFinite() || !t.zca.allFinite() || !atoms.allFinite())
    throw FormatError("codebook: non-finite values", 12);
  return {std::move(t), Dictionary(std::move(atoms))};
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_codebook(const std::filesystem::path& path, const WhiteningTransform& whitening, const Dictionary& dictionary) {
  write_file(path, serialize_codebook(whitening, dictionary));
}

CodebookArtifact load_codebook(const std::filesystem::path& path) { return parse_codebook(read_file(path)); }

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t file_checksum(const std::filesystem::path& path) { return fnv1a64(read_file(path)); }

}  // namespace sparsecode
