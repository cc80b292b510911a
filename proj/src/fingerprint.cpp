#include "uci/fingerprint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

namespace uci {

namespace {

void check_same_dims(const Grid& a, const Grid& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("grid dimensions disagree");
  }
}

}  // namespace

void accumulate(WeightedAccumulator& acc, const Grid& image, const Grid& residual) {
  check_same_dims(image, residual);
  if (acc.empty()) {
    acc.numerator = image * residual;
    acc.denominator = image * image;
    acc.count = 1;
    return;
  }
  check_same_dims(acc.numerator, image);
  acc.numerator += image * residual;
  acc.denominator += image * image;
  ++acc.count;
}

void merge(WeightedAccumulator& into, const WeightedAccumulator& other) {
  if (other.empty()) return;
  if (into.empty()) {
    into = other;
    return;
  }
  check_same_dims(into.numerator, other.numerator);
  into.numerator += other.numerator;
  into.denominator += other.denominator;
  into.count += other.count;
}

CameraFingerprint finalize(const WeightedAccumulator& acc) {
  if (acc.empty()) throw EmptyGroup("finalize on empty accumulator");
  CameraFingerprint fp;
  fp.values = (acc.denominator > 0.0).select(acc.numerator / acc.denominator, Grid::Zero(acc.numerator.rows(), acc.numerator.cols()));
  fp.support_count = acc.count;
  return fp;
}

CameraFingerprint estimate_fingerprint(std::span<const Grid> images,
                                       std::span<const Grid> residuals) {
  if (images.empty() || images.size() != residuals.size()) {
    throw EmptyGroup("estimate_fingerprint needs at least one (image, residual) pair");
  }
  Grid num = images[0] * residuals[0];
  Grid den = images[0] * images[0];
  check_same_dims(images[0], residuals[0]);
  for (std::size_t j = 1; j < images.size(); ++j) {
    check_same_dims(images[j], residuals[j]);
    check_same_dims(images[0], images[j]);
    num += images[j] * residuals[j];
    den += images[j] * images[j];
  }
  CameraFingerprint fp;
  fp.values = (den > 0.0).select(num / den, Grid::Zero(num.rows(), num.cols()));
  fp.support_count = static_cast<std::uint32_t>(images.size());
  return fp;
}

namespace {

constexpr char kMagic[4] = {'U', 'C', 'I', 'F'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint64_t kMaxSide = 1u << 20;
constexpr std::uint64_t kMaxPixels = 1u << 28;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_u32(out, bits);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) {
  const std::uint32_t bits = get_u32(p);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

void save_fingerprint(const CameraFingerprint& fp, const std::filesystem::path& path) {
  if (fp.support_count < 1) throw EmptyGroup("fingerprint without support");
  const std::uint32_t width = static_cast<std::uint32_t>(fp.values.cols());
  const std::uint32_t height = static_cast<std::uint32_t>(fp.values.rows());

  std::string buf;
  buf.reserve(18 + 4ull * width * height);
  buf.append(kMagic, 4);
  put_u16(buf, kVersion);
  put_u32(buf, width);
  put_u32(buf, height);
  put_u32(buf, fp.support_count);
  for (Eigen::Index r = 0; r < fp.values.rows(); ++r)
    for (Eigen::Index c = 0; c < fp.values.cols(); ++c)
      put_f32(buf, static_cast<float>(fp.values(r, c)));

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CameraFingerprint load_fingerprint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptFingerprintFile("cannot open " + path.string());
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (data.size() < 18) throw CorruptFingerprintFile("truncated header");
  if (std::memcmp(data.data(), kMagic, 4) != 0) throw CorruptFingerprintFile("bad magic");
  if (get_u16(data.data() + 4) != kVersion) throw CorruptFingerprintFile("unknown version");
  const std::uint64_t width = get_u32(data.data() + 6);
  const std::uint64_t height = get_u32(data.data() + 10);
  const std::uint32_t support = get_u32(data.data() + 14);
  if (width == 0 || height == 0 || width > kMaxSide || height > kMaxSide ||
      width * height > kMaxPixels) {
    throw CorruptFingerprintFile("dimension overflow");
  }
  if (support < 1) throw CorruptFingerprintFile("support_count must be >= 1");
  const std::uint64_t expected = 18 + 4 * width * height;
  if (data.size() != expected) throw CorruptFingerprintFile("payload size mismatch");

  CameraFingerprint fp;
  fp.support_count = support;
  fp.values.resize(static_cast<Eigen::Index>(height), static_cast<Eigen::Index>(width));
  const unsigned char* p = data.data() + 18;
  for (Eigen::Index r = 0; r < fp.values.rows(); ++r)
    for (Eigen::Index c = 0; c < fp.values.cols(); ++c, p += 4)
      fp.values(r, c) = static_cast<double>(get_f32(p));
  return fp;
}

}  // namespace uci
