#include "uci/imaging.hpp"

#include <algorithm>
#include <cmath>

#include "uci/wavelet.hpp"

namespace uci {

void DenoiserConfig::validate() const {
  if (wavelet_levels < 1) throw ConfigError("wavelet_levels must be >= 1");
  if (!(base_noise_variance > 0.0)) throw ConfigError("base_noise_variance must be > 0");
  if (window_sizes.empty()) throw ConfigError("window_sizes must not be empty");
  for (int w : window_sizes) {
    if (w < 3 || w % 2 == 0) throw ConfigError("window sizes must be odd and >= 3");
  }
  if (crop.width < 32 || crop.height < 32) throw ConfigError("crop must be at least 32x32");
}

Grid to_luminance(const RgbImage& image) {
  if (image.channels.empty()) throw InvalidImage("image has no channels");
  for (const Grid& ch : image.channels) {
    if (ch.size() == 0) throw InvalidImage("empty channel");
    if (ch.rows() != image.channels[0].rows() || ch.cols() != image.channels[0].cols()) {
      throw InvalidImage("channel dimensions disagree");
    }
  }
  if (image.channels.size() == 1) return image.channels[0];
  if (image.channels.size() != 3) throw InvalidImage("expected 1 or 3 channels");
  return 0.299 * image.channels[0] + 0.587 * image.channels[1] + 0.114 * image.channels[2];
}

Grid center_crop(const Grid& g, Dims crop) {
  const int rows = static_cast<int>(g.rows());
  const int cols = static_cast<int>(g.cols());
  if (rows < crop.height || cols < crop.width) {
    throw ImageTooSmall("grid smaller than crop window");
  }
  const int r0 = (rows - crop.height) / 2;
  const int c0 = (cols - crop.width) / 2;
  return g.block(r0, c0, crop.height, crop.width);
}

namespace {

// Wiener-shrinks one detail subband in place.
void shrink_subband(Grid& coeffs, int r0, int c0, int rows, int cols,
                    const std::vector<int>& windows, double sigma02) {
  if (rows == 0 || cols == 0) return;
  Grid sq(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double v = coeffs(r0 + r, c0 + c);
      sq(r, c) = v * v;
    }

  // Summed-area table of c^2.
  Grid integ = Grid::Zero(rows + 1, cols + 1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      integ(r + 1, c + 1) = sq(r, c) + integ(r, c + 1) + integ(r + 1, c) - integ(r, c);

  Grid min_mean = Grid::Constant(rows, cols, std::numeric_limits<double>::infinity());
  for (int w : windows) {
    const int h = w / 2;
    const double inv = 1.0 / (static_cast<double>(w) * w);
    for (int r = 0; r < rows; ++r) {
      const int rlo = std::max(0, r - h);
      const int rhi = std::min(rows - 1, r + h);
      for (int c = 0; c < cols; ++c) {
        const int clo = std::max(0, c - h);
        const int chi = std::min(cols - 1, c + h);
        const double sum = integ(rhi + 1, chi + 1) - integ(rlo, chi + 1) -
                           integ(rhi + 1, clo) + integ(rlo, clo);
        min_mean(r, c) = std::min(min_mean(r, c), sum * inv);
      }
    }
  }

  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double est = std::max(0.0, min_mean(r, c) - sigma02);
      coeffs(r0 + r, c0 + c) *= est / (est + sigma02);
    }
  }
}

}  // namespace

Grid denoise(const Grid& g, const DenoiserConfig& cfg) {
  cfg.validate();
  const int rows = static_cast<int>(g.rows());
  const int cols = static_cast<int>(g.cols());
  const int min_dim = 1 << cfg.wavelet_levels;
  if (rows < min_dim || cols < min_dim) {
    throw InvalidDecomposition("grid too small for wavelet level count");
  }

  WaveletPyramid p = dwt2(g, cfg.wavelet_levels);
  for (int l = 0; l < p.levels_applied; ++l) {
    const auto [lr, lc] = p.level_input_dims[static_cast<std::size_t>(l)];
    const int hr = lr / 2;
    const int hc = lc / 2;
    shrink_subband(p.coeffs, 0, hc, hr, lc - hc, cfg.window_sizes, cfg.base_noise_variance);
    shrink_subband(p.coeffs, hr, 0, lr - hr, hc, cfg.window_sizes, cfg.base_noise_variance);
    shrink_subband(p.coeffs, hr, hc, lr - hr, lc - hc, cfg.window_sizes, cfg.base_noise_variance);
  }
  return idwt2(p);
}

Grid extract_residual(const Grid& g, const DenoiserConfig& cfg) {
  return g - denoise(g, cfg);
}

}  // namespace uci
