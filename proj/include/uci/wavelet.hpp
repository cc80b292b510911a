#pragma once

#include <utility>
#include <vector>

#include "uci/types.hpp"

namespace uci {

// Separable 2D orthonormal wavelet transform, Daubechies 8-tap filter bank,
// periodic boundary extension. Coefficients are stored in the packed Mallat
// layout: each level splits its input block into [LL LH; HL HH] quadrants and
// the next level recurses on LL.
//
// A level is only applied while the current block has even rows and columns;
// levels_applied records how deep the decomposition actually went.
struct WaveletPyramid {
  Grid coeffs;
  int levels_applied = 0;
  std::vector<std::pair<int, int>> level_input_dims;  // (rows, cols) fed to each level
};

WaveletPyramid dwt2(const Grid& g, int levels);
Grid idwt2(const WaveletPyramid& p);

}  // namespace uci
