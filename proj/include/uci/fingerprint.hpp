#pragma once

#include <cmath>
#include <filesystem>
#include <span>

#include "uci/types.hpp"

namespace uci {

struct CameraFingerprint {
  Grid values;
  std::uint32_t support_count = 0;
};

// Running sums for the ratio-of-sums fingerprint estimator, so group
// fingerprints can be updated incrementally as images join a group.
struct WeightedAccumulator {
  Grid numerator;    // sum of I .* R
  Grid denominator;  // sum of I .* I
  std::uint32_t count = 0;

  bool empty() const { return count == 0; }
};

void accumulate(WeightedAccumulator& acc, const Grid& image, const Grid& residual);
void merge(WeightedAccumulator& into, const WeightedAccumulator& other);
CameraFingerprint finalize(const WeightedAccumulator& acc);

// Batch estimator: S = (sum_j I_j .* R_j) / (sum_j I_j .* I_j) elementwise,
// with zero-denominator pixels set to 0. Kept as a direct single pass so the
// incremental route above can be checked against it.
CameraFingerprint estimate_fingerprint(std::span<const Grid> images,
                                       std::span<const Grid> residuals);

// Pearson correlation of two flattened grids, clamped to [-1, 1].
// Throws UndefinedCorrelation when either input has zero variance.
template <typename DerivedA, typename DerivedB>
double correlation(const Eigen::ArrayBase<DerivedA>& a, const Eigen::ArrayBase<DerivedB>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionMismatch("correlation operands differ in shape");
  }
  const double ma = a.mean();
  const double mb = b.mean();
  const double num = ((a - ma) * (b - mb)).sum();
  const double na = std::sqrt(((a - ma) * (a - ma)).sum());
  const double nb = std::sqrt(((b - mb) * (b - mb)).sum());
  if (na == 0.0 || nb == 0.0) throw UndefinedCorrelation("constant input grid");
  const double r = num / (na * nb);
  return std::clamp(r, -1.0, 1.0);
}

inline double correlation(const CameraFingerprint& a, const CameraFingerprint& b) {
  return correlation(a.values, b.values);
}

// Fingerprint file format, bit-exact:
//   magic "UCIF" | version u16 LE = 1 | width u32 LE | height u32 LE |
//   support_count u32 LE | width*height float32 LE, row-major.
// Writes go through a temp file plus rename so concurrent readers never see
// a partial fingerprint.
void save_fingerprint(const CameraFingerprint& fp, const std::filesystem::path& path);
CameraFingerprint load_fingerprint(const std::filesystem::path& path);

}  // namespace uci
