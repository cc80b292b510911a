#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "uci/identity.hpp"
#include "uci/metrics.hpp"
#include "uci/types.hpp"

namespace uci {

// A synthetic sensor: a fixed zero-mean multiplicative sensitivity field.
// I = I0 .* (1 + K) + eta, the model under which the ratio-of-sums
// fingerprint estimator is the natural fit.
struct SyntheticCamera {
  int camera_id = 0;
  Grid prnu_field;
  double sigma_k = 0.0;
  std::uint64_t rng_seed = 0;
};

SyntheticCamera make_camera(std::uint64_t seed, Dims dims, double sigma_k);

// Smooth procedural scene: value noise plus a directional gradient, mapped to
// [32, 224]. Deterministic from the seed.
Grid render_scene(std::uint64_t scene_seed, Dims dims);

// clamp(scene * (1 + K) + gaussian(sigma), 0, 255); continuous values.
Grid capture(const SyntheticCamera& camera, std::uint64_t scene_seed, double noise_sigma);

// Nearest-integer 8-bit quantization; what actually lands in image files.
Grid quantize_u8(const Grid& g);

struct ManifestImage {
  std::string image_id;
  int camera_id = 0;
  bool repost = false;
  std::uint64_t scene_seed = 0;
  std::string file;  // dataset-relative path
};

struct ManifestAccount {
  std::string account_id;
  std::string individual_id;
  std::vector<int> own_cameras;  // ground truth, excludes the reposter camera
  std::vector<ManifestImage> images;
};

struct CameraSpec {
  int camera_id = 0;
  std::uint64_t seed = 0;
  double sigma_k = 0.0;
};

struct DatasetManifest {
  std::string protocol;
  std::uint64_t master_seed = 0;
  Dims dims;
  double noise_sigma = 0.0;
  std::vector<CameraSpec> cameras;
  int reposter_camera = -1;
  std::vector<ManifestAccount> accounts;
};

// How an individual's image pool is divided between its two accounts.
//   Balanced:        every camera's images split evenly.
//   UsageAsymmetric: one "anchor" camera (the weakest field) keeps a small
//                    presence on both accounts while the other cameras land
//                    wholesale on a single account, mirroring people whose
//                    accounts favor different devices.
enum class SplitMode { Balanced, UsageAsymmetric };

struct OfflineParams {
  int n_cameras = 11;
  int cameras_per_individual = 1;  // k in {1, 2, 3}
  int images_per_camera = 40;      // pool size per camera (balanced mode)
  int repost_per_user = 5;
  double sigma_k_min = 0.05;
  double sigma_k_max = 0.05;
  double reposter_sigma_k = 0.05;
  double noise_sigma = 2.0;
  Dims dims = {128, 128};
  SplitMode split = SplitMode::Balanced;
  // Usage-asymmetric knobs.
  int anchor_pool_min = 12;
  int anchor_pool_max = 24;
  int anchor_minority_min = 6;
  int anchor_minority_max = 10;
  int side_pool_min = 24;
  int side_pool_max = 40;
};

struct OnlineParams {
  int n_individuals = 12;
  int album_min = 24;
  int album_max = 60;
  int repost_per_user = 5;
  double sigma_k_min = 0.05;
  double sigma_k_max = 0.05;
  double reposter_sigma_k = 0.05;
  double noise_sigma = 2.0;
  Dims dims = {128, 128};
};

// Each individual owns a k-camera combination; its pool is split into two
// accounts (one positive pair per individual) and reposts from a dedicated
// extra camera are injected into every account.
DatasetManifest build_offline_dataset(const OfflineParams& params, std::uint64_t master_seed);

// Each individual owns one camera with a variable-size album.
DatasetManifest build_online_dataset(const OnlineParams& params, std::uint64_t master_seed);

// Desk-scale protocol presets used by the CLI and the evaluation harness.
OfflineParams preset_offline1();
OfflineParams preset_offline2();
OfflineParams preset_offline3();
OnlineParams preset_online();

// Pair label from the individuals' ground-truth camera sets: same individual
// is positive, disjoint camera sets negative, partial overlap excluded.
PairLabel pair_label(const ManifestAccount& a, const ManifestAccount& b);

Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> label_matrix(
    const DatasetManifest& manifest, const std::vector<std::string>& account_ids);

// Renders one manifest image (quantized, byte-identical to its file form).
Grid render_image(const DatasetManifest& manifest, const CameraSpec& camera,
                  const ManifestImage& image);
Grid render_image(const DatasetManifest& manifest, int account_index, int image_index);

const CameraSpec& camera_spec(const DatasetManifest& manifest, int camera_id);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Writes manifest.json plus every image as an 8-bit PGM under dir.
void write_dataset(const DatasetManifest& manifest, const std::filesystem::path& dir,
                   int workers = 0);

// In-memory account preparation for the identity pipeline (luminance crop of
// each rendered image).
std::vector<AccountData> prepare_accounts(const DatasetManifest& manifest, Dims crop,
                                          int workers = 0);

}  // namespace uci
