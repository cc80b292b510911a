#include "uci/wavelet.hpp"

#include <array>

namespace uci {
namespace {

// Daubechies 8-tap orthonormal scaling filter; sum = sqrt(2), energy = 1.
constexpr std::array<double, 8> kLo = {
    0.23037781330885523,   0.7148465705525415,   0.6308807679295904,
    -0.02798376941698385,  -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945,  -0.010597401784997278};

// Quadrature mirror: g[k] = (-1)^k lo[7-k].
constexpr std::array<double, 8> kHi = {
    -0.010597401784997278, -0.032883011666982945, 0.030841381835986965,
    0.18703481171888114,   -0.02798376941698385,  -0.6308807679295904,
    0.7148465705525415,    -0.23037781330885523};

// One analysis step on a length-n (even) periodic signal.
void forward_step(const double* x, int n, double* lo, double* hi) {
  const int half = n / 2;
  for (int i = 0; i < half; ++i) {
    double a = 0.0, d = 0.0;
    for (int k = 0; k < 8; ++k) {
      const double v = x[(2 * i + k) % n];
      a += kLo[k] * v;
      d += kHi[k] * v;
    }
    lo[i] = a;
    hi[i] = d;
  }
}

// Transpose of forward_step; exact reconstruction by orthonormality.
void inverse_step(const double* lo, const double* hi, int n, double* x) {
  const int half = n / 2;
  for (int i = 0; i < n; ++i) x[i] = 0.0;
  for (int i = 0; i < half; ++i) {
    for (int k = 0; k < 8; ++k) {
      x[(2 * i + k) % n] += lo[i] * kLo[k] + hi[i] * kHi[k];
    }
  }
}

void forward_level(Grid& c, int rows, int cols) {
  std::vector<double> in(std::max(rows, cols));
  std::vector<double> lo(std::max(rows, cols));
  std::vector<double> hi(std::max(rows, cols));

  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < cols; ++j) in[j] = c(r, j);
    forward_step(in.data(), cols, lo.data(), hi.data());
    const int half = cols / 2;
    for (int j = 0; j < half; ++j) {
      c(r, j) = lo[j];
      c(r, half + j) = hi[j];
    }
  }
  for (int j = 0; j < cols; ++j) {
    for (int r = 0; r < rows; ++r) in[r] = c(r, j);
    forward_step(in.data(), rows, lo.data(), hi.data());
    const int half = rows / 2;
    for (int r = 0; r < half; ++r) {
      c(r, j) = lo[r];
      c(half + r, j) = hi[r];
    }
  }
}

void inverse_level(Grid& c, int rows, int cols) {
  std::vector<double> out(std::max(rows, cols));
  std::vector<double> lo(std::max(rows, cols));
  std::vector<double> hi(std::max(rows, cols));

  for (int j = 0; j < cols; ++j) {
    const int half = rows / 2;
    for (int r = 0; r < half; ++r) {
      lo[r] = c(r, j);
      hi[r] = c(half + r, j);
    }
    inverse_step(lo.data(), hi.data(), rows, out.data());
    for (int r = 0; r < rows; ++r) c(r, j) = out[r];
  }
  for (int r = 0; r < rows; ++r) {
    const int half = cols / 2;
    for (int j = 0; j < half; ++j) {
      lo[j] = c(r, j);
      hi[j] = c(r, half + j);
    }
    inverse_step(lo.data(), hi.data(), cols, out.data());
    for (int j = 0; j < cols; ++j) c(r, j) = out[j];
  }
}

}  // namespace

WaveletPyramid dwt2(const Grid& g, int levels) {
  if (levels < 1) throw InvalidDecomposition("wavelet level count must be >= 1");
  WaveletPyramid p;
  p.coeffs = g;
  int rows = static_cast<int>(g.rows());
  int cols = static_cast<int>(g.cols());
  for (int l = 0; l < levels; ++l) {
    if (rows % 2 != 0 || cols % 2 != 0 || rows < 2 || cols < 2) break;
    p.level_input_dims.emplace_back(rows, cols);
    forward_level(p.coeffs, rows, cols);
    rows /= 2;
    cols /= 2;
    ++p.levels_applied;
  }
  return p;
}

Grid idwt2(const WaveletPyramid& p) {
  Grid out = p.coeffs;
  for (int l = p.levels_applied - 1; l >= 0; --l) {
    const auto [rows, cols] = p.level_input_dims[static_cast<std::size_t>(l)];
    inverse_level(out, rows, cols);
  }
  return out;
}

}  // namespace uci
