#include "uci/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "uci/imaging.hpp"
#include "uci/image_io.hpp"
#include "uci/parallel.hpp"
#include "uci/random.hpp"

namespace uci {

SyntheticCamera make_camera(std::uint64_t seed, Dims dims, double sigma_k) {
  if (!(sigma_k > 0.0) || sigma_k > 0.2) throw GenerationError("sigma_k must be in (0, 0.2]");
  if (dims.width < 1 || dims.height < 1) throw GenerationError("bad camera dims");
  SyntheticCamera cam;
  cam.rng_seed = seed;
  cam.sigma_k = sigma_k;
  cam.prnu_field.resize(dims.height, dims.width);
  Rng rng(seed);
  for (int r = 0; r < dims.height; ++r)
    for (int c = 0; c < dims.width; ++c) cam.prnu_field(r, c) = sigma_k * rng.gaussian();
  cam.prnu_field -= cam.prnu_field.mean();  // exactly zero-mean field
  return cam;
}

Grid render_scene(std::uint64_t scene_seed, Dims dims) {
  Rng rng(scene_seed);
  constexpr int kCell = 16;
  const int lat_w = dims.width / kCell + 2;
  const int lat_h = dims.height / kCell + 2;
  Grid lattice(lat_h, lat_w);
  for (int r = 0; r < lat_h; ++r)
    for (int c = 0; c < lat_w; ++c) lattice(r, c) = rng.uniform();

  const double angle = 2.0 * M_PI * rng.uniform();
  const double gx = std::cos(angle);
  const double gy = std::sin(angle);

  Grid scene(dims.height, dims.width);
  for (int r = 0; r < dims.height; ++r) {
    const double fy = static_cast<double>(r) / kCell;
    const int y0 = static_cast<int>(fy);
    const double ty = fy - y0;
    for (int c = 0; c < dims.width; ++c) {
      const double fx = static_cast<double>(c) / kCell;
      const int x0 = static_cast<int>(fx);
      const double tx = fx - x0;
      // Smoothstep-weighted bilinear interpolation of the lattice.
      const double sx = tx * tx * (3.0 - 2.0 * tx);
      const double sy = ty * ty * (3.0 - 2.0 * ty);
      const double v00 = lattice(y0, x0);
      const double v01 = lattice(y0, x0 + 1);
      const double v10 = lattice(y0 + 1, x0);
      const double v11 = lattice(y0 + 1, x0 + 1);
      const double noise = (v00 * (1 - sx) + v01 * sx) * (1 - sy) +
                           (v10 * (1 - sx) + v11 * sx) * sy;
      const double u = dims.width > 1 ? static_cast<double>(c) / (dims.width - 1) : 0.5;
      const double v = dims.height > 1 ? static_cast<double>(r) / (dims.height - 1) : 0.5;
      const double grad = 0.5 + 0.5 * (gx * (u - 0.5) + gy * (v - 0.5)) * 2.0 / std::sqrt(2.0);
      const double blend = std::clamp(0.65 * noise + 0.35 * grad, 0.0, 1.0);
      scene(r, c) = 32.0 + 192.0 * blend;
    }
  }
  return scene;
}

Grid capture(const SyntheticCamera& camera, std::uint64_t scene_seed, double noise_sigma) {
  if (noise_sigma < 0.0) throw GenerationError("noise sigma must be >= 0");
  const Dims dims = dims_of(camera.prnu_field);
  Grid img = render_scene(scene_seed, dims) * (1.0 + camera.prnu_field);
  if (noise_sigma > 0.0) {
    Rng rng(derive_seed(scene_seed, 0xE7A));
    for (int r = 0; r < dims.height; ++r)
      for (int c = 0; c < dims.width; ++c) img(r, c) += noise_sigma * rng.gaussian();
  }
  return img.min(255.0).max(0.0);
}

Grid quantize_u8(const Grid& g) {
  return g.unaryExpr([](double v) { return std::floor(std::clamp(v, 0.0, 255.0) + 0.5); });
}

namespace {

struct Builder {
  DatasetManifest manifest;
  std::uint64_t master = 0;
  int image_counter = 0;

  void add_image(ManifestAccount& account, int camera_id, bool repost) {
    ManifestImage img;
    img.image_id = account.account_id + "_" + std::to_string(account.images.size());
    img.camera_id = camera_id;
    img.repost = repost;
    img.scene_seed = derive_seed(master, 0x1111, static_cast<std::uint64_t>(image_counter++));
    img.file = account.account_id + "/" + img.image_id + ".pgm";
    account.images.push_back(std::move(img));
  }
};

std::string zero_pad(const std::string& prefix, int value) {
  std::string digits = std::to_string(value);
  while (digits.size() < 3) digits.insert(digits.begin(), '0');
  return prefix + digits;
}

std::vector<std::vector<int>> camera_combinations(int n, int k, Rng& rng) {
  std::vector<std::vector<int>> combos;
  if (k == 1) {
    for (int i = 0; i < n; ++i) combos.push_back({i});
    return combos;
  }
  if (k == 2) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) combos.push_back({i, j});
    return combos;
  }
  // k == 3: sample as many combinations as C(n, 2), keeping the benchmark's
  // 110-user protocol size, uniformly without replacement.
  std::vector<std::vector<int>> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int l = j + 1; l < n; ++l) all.push_back({i, j, l});
  const std::size_t want = std::min(all.size(), static_cast<std::size_t>(n * (n - 1) / 2));
  for (std::size_t i = 0; i < want; ++i) {
    const std::size_t pick = i + static_cast<std::size_t>(rng.integer(all.size() - i));
    std::swap(all[i], all[pick]);
  }
  all.resize(want);
  return all;
}

void make_cameras(DatasetManifest& m, std::uint64_t master, int n, double lo, double hi,
                  double reposter_sigma) {
  for (int c = 0; c < n; ++c) {
    Rng srng(derive_seed(master, 0xCA, static_cast<std::uint64_t>(c)));
    const double sigma = lo + (hi - lo) * srng.uniform();
    m.cameras.push_back({c, derive_seed(master, 0xCAFE, static_cast<std::uint64_t>(c)), sigma});
  }
  m.reposter_camera = n;
  m.cameras.push_back(
      {n, derive_seed(master, 0xCAFE, static_cast<std::uint64_t>(n)), reposter_sigma});
}

}  // namespace

DatasetManifest build_offline_dataset(const OfflineParams& p, std::uint64_t master_seed) {
  const int k = p.cameras_per_individual;
  if (k < 1 || k > 3) throw GenerationError("cameras_per_individual must be 1, 2 or 3");
  if (p.n_cameras < k || (k > 1 && p.n_cameras < 2)) {
    throw GenerationError("not enough cameras for the requested combination count");
  }
  if (p.images_per_camera < 4) throw GenerationError("insufficient images per camera");
  if (p.repost_per_user < 0) throw GenerationError("repost_per_user must be >= 0");
  if (p.split == SplitMode::UsageAsymmetric) {
    if (k < 2) throw GenerationError("usage-asymmetric split needs k >= 2");
    if (p.anchor_pool_min < p.anchor_minority_min * 2)
      throw GenerationError("anchor pool too small for its minority share");
  }

  Builder b;
  b.master = master_seed;
  b.manifest.protocol = "offline" + std::to_string(k);
  b.manifest.master_seed = master_seed;
  b.manifest.dims = p.dims;
  b.manifest.noise_sigma = p.noise_sigma;
  make_cameras(b.manifest, master_seed, p.n_cameras, p.sigma_k_min, p.sigma_k_max,
               p.reposter_sigma_k);

  Rng combo_rng(derive_seed(master_seed, 0xC0));
  const auto combos = camera_combinations(p.n_cameras, k, combo_rng);

  int account_counter = 0;
  for (int ind = 0; ind < static_cast<int>(combos.size()); ++ind) {
    const std::vector<int>& cams = combos[static_cast<std::size_t>(ind)];
    Rng rng(derive_seed(master_seed, 0x1D, static_cast<std::uint64_t>(ind)));

    ManifestAccount acc_a, acc_b;
    acc_a.account_id = zero_pad("u", account_counter++);
    acc_b.account_id = zero_pad("u", account_counter++);
    acc_a.individual_id = zero_pad("i", ind);
    acc_b.individual_id = acc_a.individual_id;
    acc_a.own_cameras = cams;
    acc_b.own_cameras = cams;

    if (p.split == SplitMode::Balanced || k == 1) {
      for (int cam : cams) {
        const int pool = p.images_per_camera;
        const int to_a = pool / 2;
        for (int i = 0; i < to_a; ++i) b.add_image(acc_a, cam, false);
        for (int i = to_a; i < pool; ++i) b.add_image(acc_b, cam, false);
      }
    } else {
      // The weakest camera anchors the pair: a small presence on both
      // accounts. Every other camera lands wholesale on one side, the first
      // on the account opposite the anchor majority, alternating after that.
      int anchor = cams[0];
      for (int cam : cams) {
        if (camera_spec(b.manifest, cam).sigma_k < camera_spec(b.manifest, anchor).sigma_k)
          anchor = cam;
      }
      const int anchor_pool = rng.range(p.anchor_pool_min, p.anchor_pool_max);
      const int minority_cap = std::min(p.anchor_minority_max, anchor_pool - p.anchor_minority_min);
      const int minority = rng.range(p.anchor_minority_min, minority_cap);
      const bool minority_on_a = rng.integer(2) == 0;
      ManifestAccount& anchor_small = minority_on_a ? acc_a : acc_b;
      ManifestAccount& anchor_large = minority_on_a ? acc_b : acc_a;
      for (int i = 0; i < minority; ++i) b.add_image(anchor_small, anchor, false);
      for (int i = minority; i < anchor_pool; ++i) b.add_image(anchor_large, anchor, false);

      bool side_toggle = minority_on_a;  // first side camera opposes the anchor majority
      for (int cam : cams) {
        if (cam == anchor) continue;
        const int pool = rng.range(p.side_pool_min, p.side_pool_max);
        ManifestAccount& dst = side_toggle ? acc_a : acc_b;
        for (int i = 0; i < pool; ++i) b.add_image(dst, cam, false);
        side_toggle = !side_toggle;
      }
    }

    for (int i = 0; i < p.repost_per_user; ++i) b.add_image(acc_a, b.manifest.reposter_camera, true);
    for (int i = 0; i < p.repost_per_user; ++i) b.add_image(acc_b, b.manifest.reposter_camera, true);

    if (acc_a.images.size() < 2 || acc_b.images.size() < 2)
      throw GenerationError("account ended up with fewer than 2 images");
    b.manifest.accounts.push_back(std::move(acc_a));
    b.manifest.accounts.push_back(std::move(acc_b));
  }
  return b.manifest;
}

DatasetManifest build_online_dataset(const OnlineParams& p, std::uint64_t master_seed) {
  if (p.n_individuals < 2) throw GenerationError("need at least 2 individuals");
  if (p.album_min < 4 || p.album_max < p.album_min) throw GenerationError("bad album size range");

  Builder b;
  b.master = master_seed;
  b.manifest.protocol = "online";
  b.manifest.master_seed = master_seed;
  b.manifest.dims = p.dims;
  b.manifest.noise_sigma = p.noise_sigma;
  make_cameras(b.manifest, master_seed, p.n_individuals, p.sigma_k_min, p.sigma_k_max,
               p.reposter_sigma_k);

  int account_counter = 0;
  for (int ind = 0; ind < p.n_individuals; ++ind) {
    Rng rng(derive_seed(master_seed, 0x1D, static_cast<std::uint64_t>(ind)));
    const int album = rng.range(p.album_min, p.album_max);

    ManifestAccount acc_a, acc_b;
    acc_a.account_id = zero_pad("u", account_counter++);
    acc_b.account_id = zero_pad("u", account_counter++);
    acc_a.individual_id = zero_pad("i", ind);
    acc_b.individual_id = acc_a.individual_id;
    acc_a.own_cameras = {ind};
    acc_b.own_cameras = {ind};

    const int to_a = album / 2;
    for (int i = 0; i < to_a; ++i) b.add_image(acc_a, ind, false);
    for (int i = to_a; i < album; ++i) b.add_image(acc_b, ind, false);
    for (int i = 0; i < p.repost_per_user; ++i) b.add_image(acc_a, b.manifest.reposter_camera, true);
    for (int i = 0; i < p.repost_per_user; ++i) b.add_image(acc_b, b.manifest.reposter_camera, true);

    b.manifest.accounts.push_back(std::move(acc_a));
    b.manifest.accounts.push_back(std::move(acc_b));
  }
  return b.manifest;
}

OfflineParams preset_offline1() {
  OfflineParams p;
  p.cameras_per_individual = 1;
  p.images_per_camera = 40;  // 20 per account
  return p;
}

OfflineParams preset_offline2() {
  OfflineParams p;
  p.cameras_per_individual = 2;
  p.split = SplitMode::UsageAsymmetric;
  p.sigma_k_min = 0.012;
  p.sigma_k_max = 0.08;
  return p;
}

OfflineParams preset_offline3() {
  OfflineParams p = preset_offline2();
  p.cameras_per_individual = 3;
  return p;
}

OnlineParams preset_online() { return OnlineParams{}; }

PairLabel pair_label(const ManifestAccount& a, const ManifestAccount& b) {
  if (a.individual_id == b.individual_id) return PairLabel::Positive;
  for (int ca : a.own_cameras)
    for (int cb : b.own_cameras)
      if (ca == cb) return PairLabel::Excluded;
  return PairLabel::Negative;
}

Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> label_matrix(
    const DatasetManifest& manifest, const std::vector<std::string>& account_ids) {
  const int n = static_cast<int>(account_ids.size());
  std::vector<const ManifestAccount*> accounts;
  accounts.reserve(account_ids.size());
  for (const std::string& id : account_ids) {
    const ManifestAccount* found = nullptr;
    for (const ManifestAccount& acc : manifest.accounts)
      if (acc.account_id == id) found = &acc;
    if (!found) throw UnknownAccount("manifest has no account " + id);
    accounts.push_back(found);
  }
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> labels(n, n);
  for (int i = 0; i < n; ++i) {
    labels(i, i) = static_cast<int>(PairLabel::Excluded);
    for (int j = i + 1; j < n; ++j) {
      const int lab = static_cast<int>(pair_label(*accounts[static_cast<std::size_t>(i)],
                                                  *accounts[static_cast<std::size_t>(j)]));
      labels(i, j) = lab;
      labels(j, i) = lab;
    }
  }
  return labels;
}

const CameraSpec& camera_spec(const DatasetManifest& manifest, int camera_id) {
  for (const CameraSpec& c : manifest.cameras)
    if (c.camera_id == camera_id) return c;
  throw GenerationError("manifest has no camera " + std::to_string(camera_id));
}

Grid render_image(const DatasetManifest& manifest, const CameraSpec& camera,
                  const ManifestImage& image) {
  const SyntheticCamera cam = make_camera(camera.seed, manifest.dims, camera.sigma_k);
  return quantize_u8(capture(cam, image.scene_seed, manifest.noise_sigma));
}

Grid render_image(const DatasetManifest& manifest, int account_index, int image_index) {
  const ManifestAccount& acc = manifest.accounts.at(static_cast<std::size_t>(account_index));
  const ManifestImage& img = acc.images.at(static_cast<std::size_t>(image_index));
  return render_image(manifest, camera_spec(manifest, img.camera_id), img);
}

namespace {

nlohmann::json manifest_to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["format"] = "uci-manifest";
  j["version"] = 1;
  j["protocol"] = m.protocol;
  j["master_seed"] = m.master_seed;
  j["width"] = m.dims.width;
  j["height"] = m.dims.height;
  j["noise_sigma"] = m.noise_sigma;
  j["reposter_camera"] = m.reposter_camera;
  j["cameras"] = nlohmann::json::array();
  for (const CameraSpec& c : m.cameras) {
    j["cameras"].push_back({{"id", c.camera_id}, {"seed", c.seed}, {"sigma_k", c.sigma_k}});
  }
  j["accounts"] = nlohmann::json::array();
  for (const ManifestAccount& a : m.accounts) {
    nlohmann::json ja;
    ja["account_id"] = a.account_id;
    ja["individual_id"] = a.individual_id;
    ja["own_cameras"] = a.own_cameras;
    ja["images"] = nlohmann::json::array();
    for (const ManifestImage& img : a.images) {
      ja["images"].push_back({{"image_id", img.image_id},
                              {"camera", img.camera_id},
                              {"repost", img.repost},
                              {"scene_seed", img.scene_seed},
                              {"file", img.file}});
    }
    j["accounts"].push_back(std::move(ja));
  }
  return j;
}

}  // namespace

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out << manifest_to_json(manifest).dump(2) << '\n';
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  if (j.value("format", "") != "uci-manifest") throw Error("not a dataset manifest");
  DatasetManifest m;
  m.protocol = j.at("protocol").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.dims = {j.at("width").get<int>(), j.at("height").get<int>()};
  m.noise_sigma = j.at("noise_sigma").get<double>();
  m.reposter_camera = j.at("reposter_camera").get<int>();
  for (const nlohmann::json& jc : j.at("cameras")) {
    m.cameras.push_back({jc.at("id").get<int>(), jc.at("seed").get<std::uint64_t>(),
                         jc.at("sigma_k").get<double>()});
  }
  for (const nlohmann::json& ja : j.at("accounts")) {
    ManifestAccount a;
    a.account_id = ja.at("account_id").get<std::string>();
    a.individual_id = ja.at("individual_id").get<std::string>();
    a.own_cameras = ja.at("own_cameras").get<std::vector<int>>();
    for (const nlohmann::json& ji : ja.at("images")) {
      a.images.push_back({ji.at("image_id").get<std::string>(), ji.at("camera").get<int>(),
                          ji.at("repost").get<bool>(), ji.at("scene_seed").get<std::uint64_t>(),
                          ji.at("file").get<std::string>()});
    }
    m.accounts.push_back(std::move(a));
  }
  return m;
}

void write_dataset(const DatasetManifest& manifest, const std::filesystem::path& dir,
                   int workers) {
  std::filesystem::create_directories(dir);
  for (const ManifestAccount& acc : manifest.accounts) {
    std::filesystem::create_directories(dir / acc.account_id);
  }

  struct Job {
    int account;
    int image;
  };
  std::vector<Job> jobs;
  for (int a = 0; a < static_cast<int>(manifest.accounts.size()); ++a)
    for (int i = 0; i < static_cast<int>(manifest.accounts[static_cast<std::size_t>(a)].images.size()); ++i)
      jobs.push_back({a, i});

  parallel_for(static_cast<int>(jobs.size()), workers, [&](int idx) {
    const Job& job = jobs[static_cast<std::size_t>(idx)];
    const ManifestAccount& acc = manifest.accounts[static_cast<std::size_t>(job.account)];
    const ManifestImage& img = acc.images[static_cast<std::size_t>(job.image)];
    write_pgm(render_image(manifest, job.account, job.image), dir / img.file);
  });

  save_manifest(manifest, dir / "manifest.json");
}

std::vector<AccountData> prepare_accounts(const DatasetManifest& manifest, Dims crop,
                                          int workers) {
  std::vector<AccountData> out(manifest.accounts.size());

  // Camera fields are shared across images; build them once.
  std::vector<SyntheticCamera> cams;
  cams.reserve(manifest.cameras.size());
  for (const CameraSpec& c : manifest.cameras)
    cams.push_back(make_camera(c.seed, manifest.dims, c.sigma_k));
  auto camera_of = [&](int id) -> const SyntheticCamera& {
    for (std::size_t i = 0; i < cams.size(); ++i)
      if (manifest.cameras[i].camera_id == id) return cams[i];
    throw GenerationError("unknown camera id " + std::to_string(id));
  };

  struct Job {
    int account;
    int image;
  };
  std::vector<Job> jobs;
  for (int a = 0; a < static_cast<int>(manifest.accounts.size()); ++a) {
    const ManifestAccount& acc = manifest.accounts[static_cast<std::size_t>(a)];
    out[static_cast<std::size_t>(a)].account_id = acc.account_id;
    out[static_cast<std::size_t>(a)].image_ids.resize(acc.images.size());
    out[static_cast<std::size_t>(a)].images.resize(acc.images.size());
    for (int i = 0; i < static_cast<int>(acc.images.size()); ++i) jobs.push_back({a, i});
  }
  parallel_for(static_cast<int>(jobs.size()), workers, [&](int idx) {
    const Job& job = jobs[static_cast<std::size_t>(idx)];
    const ManifestAccount& acc = manifest.accounts[static_cast<std::size_t>(job.account)];
    const ManifestImage& img = acc.images[static_cast<std::size_t>(job.image)];
    Grid g = quantize_u8(capture(camera_of(img.camera_id), img.scene_seed, manifest.noise_sigma));
    out[static_cast<std::size_t>(job.account)].image_ids[static_cast<std::size_t>(job.image)] =
        img.image_id;
    out[static_cast<std::size_t>(job.account)].images[static_cast<std::size_t>(job.image)] =
        center_crop(g, crop);
  });
  return out;
}

}  // namespace uci
