#pragma once

#include <vector>

#include "uci/types.hpp"

namespace uci {

// Configuration of the denoising filter used to split an image into a smooth
// estimate and its residual noise. Defaults follow the usual sensor-noise
// extraction setup: 4-level Daubechies-8 decomposition, local Wiener
// shrinkage with sigma0^2 = 81 on the 8-bit intensity scale, window sizes
// {3,5,7,9}, and a 256x256 central crop for mixed-size inputs.
struct DenoiserConfig {
  int wavelet_levels = 4;
  double base_noise_variance = 81.0;
  std::vector<int> window_sizes = {3, 5, 7, 9};
  Dims crop = {256, 256};

  void validate() const;  // throws ConfigError on a broken configuration
};

struct RgbImage {
  std::vector<Grid> channels;  // 1 (grayscale) or 3 (RGB) planes
};

// ITU-R BT.601 luma weights for RGB input; single-channel input passes through.
Grid to_luminance(const RgbImage& image);

Grid center_crop(const Grid& g, Dims crop);

// L-level wavelet decomposition, per-coefficient local Wiener shrinkage of the
// detail subbands, inverse transform. The approximation subband is untouched.
// Local signal variance at a coefficient is max(0, min over window sizes of
// the windowed mean of c^2, minus sigma0^2); window means use zero padding
// with a constant w*w divisor. Decomposition stops early if a subband
// dimension becomes odd.
Grid denoise(const Grid& g, const DenoiserConfig& cfg);

// Residual noise: g - denoise(g).
Grid extract_residual(const Grid& g, const DenoiserConfig& cfg);

}  // namespace uci
