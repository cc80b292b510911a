#pragma once

#include <filesystem>

#include "uci/imaging.hpp"
#include "uci/types.hpp"

namespace uci {

// Netpbm raster I/O: binary P5 (grayscale) and P6 (RGB), plus their ASCII
// forms P2/P3, 8-bit maxval. Values outside [0, 255] are clamped and rounded
// on write.
RgbImage load_image(const std::filesystem::path& path);
void write_pgm(const Grid& g, const std::filesystem::path& path);

// Loads, converts to luminance, center-crops.
Grid load_luminance(const std::filesystem::path& path, Dims crop);

}  // namespace uci
