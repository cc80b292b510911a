#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "uci/imaging.hpp"
#include "uci/wavelet.hpp"

using uci::DenoiserConfig;
using uci::Grid;

namespace {

Grid constant_grid(int rows, int cols, double v) { return Grid::Constant(rows, cols, v); }

double max_abs_diff(const Grid& a, const Grid& b) { return (a - b).abs().maxCoeff(); }

}  // namespace

TEST_CASE("to_luminance") {
  SUBCASE("pure gray pixel keeps its value") {
    uci::RgbImage img;
    img.channels = {constant_grid(2, 2, 50), constant_grid(2, 2, 50), constant_grid(2, 2, 50)};
    const Grid y = uci::to_luminance(img);
    CHECK(y(0, 0) == doctest::Approx(50.0).epsilon(1e-12));
  }
  SUBCASE("pure red matches the weighted sum") {
    uci::RgbImage img;
    img.channels = {constant_grid(1, 1, 255), constant_grid(1, 1, 0), constant_grid(1, 1, 0)};
    const Grid y = uci::to_luminance(img);
    CHECK(y(0, 0) == doctest::Approx(0.299 * 255.0).epsilon(1e-12));
    CHECK(y(0, 0) == doctest::Approx(76.245).epsilon(1e-9));
  }
  SUBCASE("single channel passes through unchanged") {
    uci::RgbImage img;
    img.channels = {oracle::random_grid(1, 5, 7)};
    const Grid y = uci::to_luminance(img);
    CHECK((y == img.channels[0]).all());
  }
  SUBCASE("empty image rejected") {
    uci::RgbImage img;
    CHECK_THROWS_AS(uci::to_luminance(img), uci::InvalidImage);
  }
  SUBCASE("mismatched channels rejected") {
    uci::RgbImage img;
    img.channels = {constant_grid(2, 2, 1), constant_grid(2, 3, 1), constant_grid(2, 2, 1)};
    CHECK_THROWS_AS(uci::to_luminance(img), uci::InvalidImage);
  }
}

TEST_CASE("center_crop") {
  SUBCASE("full-size crop is the identity") {
    const Grid g = oracle::random_grid(2, 16, 16);
    CHECK((uci::center_crop(g, {16, 16}) == g).all());
  }
  SUBCASE("5x5 to 3x3 takes the symmetric window") {
    Grid g(5, 5);
    for (int r = 0; r < 5; ++r)
      for (int c = 0; c < 5; ++c) g(r, c) = 10 * r + c;
    const Grid out = uci::center_crop(g, {3, 3});
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(out(r, c) == 10 * (r + 1) + (c + 1));
  }
  SUBCASE("undersized grid rejected") {
    const Grid g = oracle::random_grid(3, 3, 6);  // 3 rows x 6 cols
    CHECK_THROWS_AS(uci::center_crop(g, {4, 4}), uci::ImageTooSmall);
    CHECK_THROWS_AS(uci::center_crop(g, {7, 3}), uci::ImageTooSmall);
  }
  SUBCASE("idempotent") {
    const Grid g = oracle::random_grid(4, 33, 47);
    const Grid once = uci::center_crop(g, {21, 13});
    const Grid twice = uci::center_crop(once, {21, 13});
    CHECK((once == twice).all());
  }
}

TEST_CASE("wavelet transform reconstructs exactly") {
  for (std::uint32_t seed : {10u, 11u}) {
    const Grid g = oracle::random_grid(seed, 48, 64);
    const uci::WaveletPyramid p = uci::dwt2(g, 4);
    CHECK(p.levels_applied == 4);
    CHECK(max_abs_diff(uci::idwt2(p), g) < 2e-9);
  }
  // Odd intermediate size stops the decomposition early: 40 -> 20 -> 10 -> 5.
  const Grid g = oracle::random_grid(12, 40, 40);
  const uci::WaveletPyramid p = uci::dwt2(g, 4);
  CHECK(p.levels_applied == 3);
  CHECK(max_abs_diff(uci::idwt2(p), g) < 2e-9);
}

TEST_CASE("denoise") {
  const DenoiserConfig cfg;

  SUBCASE("constant grid is a fixed point") {
    const Grid g = constant_grid(64, 64, 128.0);
    CHECK(max_abs_diff(uci::denoise(g, cfg), g) < 1e-9);
  }
  SUBCASE("vanishing noise floor returns the input") {
    DenoiserConfig tiny = cfg;
    tiny.base_noise_variance = 1e-12;
    const Grid g = oracle::random_grid(3, 64, 64);
    CHECK(max_abs_diff(uci::denoise(g, tiny), g) < 1e-6);
  }
  SUBCASE("matches the straight-line oracle") {
    const Grid g = oracle::random_grid(42, 64, 64);
    const Grid lib = uci::denoise(g, cfg);
    const Grid ref = oracle::to_grid(
        oracle::denoise(oracle::from_grid(g), cfg.wavelet_levels, cfg.window_sizes,
                        cfg.base_noise_variance));
    CHECK(max_abs_diff(lib, ref) < 1e-9);
  }
  SUBCASE("oracle agreement on non-square and level-clamped inputs") {
    DenoiserConfig c2 = cfg;
    c2.wavelet_levels = 2;
    c2.window_sizes = {3};
    const Grid a = oracle::random_grid(43, 32, 48);
    CHECK(max_abs_diff(uci::denoise(a, c2),
                       oracle::to_grid(oracle::denoise(oracle::from_grid(a), 2, {3}, 81.0))) < 1e-9);
    const Grid b = oracle::random_grid(44, 40, 40);  // clamps at level 3
    CHECK(max_abs_diff(uci::denoise(b, cfg),
                       oracle::to_grid(oracle::denoise(oracle::from_grid(b), 4,
                                                       cfg.window_sizes, 81.0))) < 1e-9);
  }
  SUBCASE("grid too small for the level count") {
    const Grid g = oracle::random_grid(5, 8, 8);
    CHECK_THROWS_AS(uci::denoise(g, cfg), uci::InvalidDecomposition);
  }
  SUBCASE("deterministic") {
    const Grid g = oracle::random_grid(6, 64, 64);
    CHECK((uci::denoise(g, cfg) == uci::denoise(g, cfg)).all());
  }
  SUBCASE("config validation") {
    DenoiserConfig bad = cfg;
    bad.window_sizes = {4};
    CHECK_THROWS_AS(uci::denoise(oracle::random_grid(7, 64, 64), bad), uci::ConfigError);
    bad = cfg;
    bad.base_noise_variance = 0.0;
    CHECK_THROWS_AS(uci::denoise(oracle::random_grid(8, 64, 64), bad), uci::ConfigError);
  }
}

TEST_CASE("extract_residual") {
  const DenoiserConfig cfg;

  SUBCASE("constant grid leaves no residual") {
    const Grid g = constant_grid(64, 64, 200.0);
    CHECK(uci::extract_residual(g, cfg).abs().maxCoeff() < 1e-9);
  }
  SUBCASE("residual plus denoised reconstructs the image") {
    const Grid g = oracle::random_grid(21, 64, 64);
    const Grid r = uci::extract_residual(g, cfg);
    const Grid d = uci::denoise(g, cfg);
    CHECK(max_abs_diff(r + d, g) < 1e-9);
  }
  SUBCASE("matches oracle composition") {
    const Grid g = oracle::random_grid(22, 64, 64);
    const oracle::Mat ref_d = oracle::denoise(oracle::from_grid(g), cfg.wavelet_levels,
                                              cfg.window_sizes, cfg.base_noise_variance);
    const Grid expected = g - oracle::to_grid(ref_d);
    CHECK(max_abs_diff(uci::extract_residual(g, cfg), expected) < 1e-9);
  }
  SUBCASE("residual energy bounded by centered signal energy") {
    for (std::uint32_t seed : {30u, 31u, 32u}) {
      const Grid g = oracle::random_grid(seed, 64, 48, 20.0, 230.0);
      const Grid r = uci::extract_residual(g, cfg);
      const double signal = ((g - g.mean()) * (g - g.mean())).sum();
      CHECK((r * r).sum() <= signal * (1.0 + 1e-12) + 1e-9);
    }
  }
}
