#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include <json.hpp>

#include "oracles.hpp"
#include "uci/clustering.hpp"
#include "uci/metrics.hpp"
#include "uci/synth.hpp"

using uci::ClusterConfig;
using uci::ClusterResult;
using uci::Grid;
using uci::ImageGroup;
using uci::TraceEvent;

namespace {

// (image, residual) pairs for n captures from one synthetic camera.
void synth_pairs(std::uint64_t cam_seed, std::uint64_t scene_base, int n, double sigma_k,
                 std::vector<Grid>& images, std::vector<Grid>& residuals,
                 uci::Dims dims = {64, 64}) {
  const uci::SyntheticCamera cam = uci::make_camera(cam_seed, dims, sigma_k);
  const uci::DenoiserConfig cfg;
  for (int i = 0; i < n; ++i) {
    images.push_back(uci::capture(cam, scene_base + static_cast<std::uint64_t>(i), 2.0));
    residuals.push_back(uci::extract_residual(images.back(), cfg));
  }
}

ImageGroup group_of(const std::vector<int>& members, const std::vector<Grid>& images,
                    const std::vector<Grid>& residuals) {
  ImageGroup g;
  g.members = members;
  for (int m : members)
    uci::accumulate(g.acc, images[static_cast<std::size_t>(m)],
                    residuals[static_cast<std::size_t>(m)]);
  g.fingerprint = uci::finalize(g.acc);
  return g;
}

std::set<int> member_set(const ClusterResult& r) {
  std::set<int> out;
  for (const ImageGroup& g : r.groups) out.insert(g.members.begin(), g.members.end());
  out.insert(r.rejected_ids.begin(), r.rejected_ids.end());
  return out;
}

}  // namespace

TEST_CASE("pairwise_residual_correlations") {
  std::vector<Grid> images, residuals;
  synth_pairs(1, 100, 4, 0.05, images, residuals);

  SUBCASE("matches the per-pair oracle and is symmetric with unit diagonal") {
    const Eigen::MatrixXd m = uci::pairwise_residual_correlations(residuals);
    for (int j = 0; j < 4; ++j) {
      CHECK(m(j, j) == 1.0);
      for (int k = 0; k < 4; ++k) {
        CHECK(m(j, k) == m(k, j));
        if (j != k)
          CHECK(m(j, k) == doctest::Approx(oracle::pearson(
                               residuals[static_cast<std::size_t>(j)],
                               residuals[static_cast<std::size_t>(k)])).epsilon(1e-9));
      }
    }
  }
  SUBCASE("duplicate residuals correlate to exactly 1") {
    std::vector<Grid> dup = {residuals[0], residuals[0]};
    const Eigen::MatrixXd m = uci::pairwise_residual_correlations(dup);
    CHECK(m(0, 1) == 1.0);
  }
  SUBCASE("constant residual raises UndefinedCorrelation") {
    std::vector<Grid> bad = {residuals[0], Grid::Constant(64, 64, 0.0)};
    CHECK_THROWS_AS(uci::pairwise_residual_correlations(bad), uci::UndefinedCorrelation);
  }
}

TEST_CASE("select_seeds follows the descending greedy scan") {
  std::vector<Grid> images, residuals;
  synth_pairs(2, 200, 4, 0.05, images, residuals, {32, 32});

  SUBCASE("two disjoint high pairs found") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.01);
    m.diagonal().setOnes();
    m(0, 1) = m(1, 0) = 0.9;
    m(2, 3) = m(3, 2) = 0.85;
    std::vector<int> pool;
    std::vector<TraceEvent> trace;
    const auto groups = uci::select_seeds(m, images, residuals, 0.5, pool, trace, 0);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].members == std::vector<int>{0, 1});
    CHECK(groups[1].members == std::vector<int>{2, 3});
    CHECK(pool.empty());
    CHECK(trace.size() == 2);
  }
  SUBCASE("all below threshold founds nothing") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.1);
    m.diagonal().setOnes();
    std::vector<int> pool;
    std::vector<TraceEvent> trace;
    const auto groups = uci::select_seeds(m, images, residuals, 0.5, pool, trace, 0);
    CHECK(groups.empty());
    CHECK(pool == std::vector<int>{0, 1, 2, 3});
  }
  SUBCASE("a consumed image cannot seed twice") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(4, 4, 0.01);
    m.diagonal().setOnes();
    m(0, 1) = m(1, 0) = 0.9;
    m(1, 2) = m(2, 1) = 0.8;
    std::vector<int> pool;
    std::vector<TraceEvent> trace;
    const auto groups = uci::select_seeds(m, images, residuals, 0.5, pool, trace, 0);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].members == std::vector<int>{0, 1});
    CHECK(pool == std::vector<int>{2, 3});
  }
}

TEST_CASE("merge_groups") {
  SUBCASE("single group unchanged") {
    std::vector<Grid> images, residuals;
    synth_pairs(3, 300, 2, 0.05, images, residuals, {32, 32});
    std::vector<ImageGroup> groups = {group_of({0, 1}, images, residuals)};
    std::vector<TraceEvent> trace;
    uci::merge_groups(groups, 0.3, trace, 1);
    CHECK(groups.size() == 1);
    CHECK(trace.empty());
  }
  SUBCASE("same-camera groups merge, cross-camera groups do not") {
    std::vector<Grid> images, residuals;
    synth_pairs(4, 400, 4, 0.05, images, residuals);   // camera A: ids 0..3
    synth_pairs(5, 500, 4, 0.05, images, residuals);   // camera B: ids 4..7

    std::vector<ImageGroup> same = {group_of({0, 1}, images, residuals),
                                    group_of({2, 3}, images, residuals)};
    std::vector<TraceEvent> trace;
    uci::merge_groups(same, 0.3, trace, 1);
    REQUIRE(same.size() == 1);
    CHECK(same[0].members == std::vector<int>{0, 1, 2, 3});
    CHECK(same[0].fingerprint.support_count == 4);

    std::vector<ImageGroup> cross = {group_of({0, 1}, images, residuals),
                                     group_of({4, 5}, images, residuals)};
    trace.clear();
    uci::merge_groups(cross, 0.3, trace, 1);
    CHECK(cross.size() == 2);
  }
}

TEST_CASE("assign_remaining") {
  std::vector<Grid> images, residuals;
  synth_pairs(6, 600, 10, 0.05, images, residuals);

  SUBCASE("empty pool is a no-op") {
    std::vector<ImageGroup> groups = {group_of({0, 1}, images, residuals)};
    std::vector<int> pool;
    std::vector<TraceEvent> trace;
    CHECK(uci::assign_remaining(groups, pool, images, residuals, 0.2, trace, 1) == 0);
    CHECK(groups[0].members.size() == 2);
  }
  SUBCASE("impossible threshold rejects everything") {
    std::vector<ImageGroup> groups = {group_of({0, 1}, images, residuals)};
    std::vector<int> pool = {2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<TraceEvent> trace;
    CHECK(uci::assign_remaining(groups, pool, images, residuals, 1.0 + 1e-9, trace, 1) == 0);
    CHECK(pool.size() == 8);
  }
  SUBCASE("same-camera pool joins the seed group") {
    std::vector<ImageGroup> groups = {group_of({0, 1}, images, residuals)};
    std::vector<int> pool = {2, 3, 4, 5, 6, 7, 8, 9};
    std::vector<TraceEvent> trace;
    CHECK(uci::assign_remaining(groups, pool, images, residuals, 0.2, trace, 1) == 8);
    CHECK(groups[0].members.size() == 10);
    CHECK(pool.empty());
  }
}

TEST_CASE("filter_small_groups") {
  std::vector<Grid> images, residuals;
  synth_pairs(7, 700, 12, 0.05, images, residuals, {32, 32});

  std::vector<ImageGroup> groups = {
      group_of({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, images, residuals),
      group_of({10, 11}, images, residuals)};
  CHECK(uci::filter_small_groups(groups, 2).size() == 2);
  const auto kept = uci::filter_small_groups(groups, 3);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].support_count == 10);
}

TEST_CASE("estimate_user_fingerprints end to end") {
  const uci::DenoiserConfig den;
  ClusterConfig cfg;
  cfg.alpha = 0.10;
  cfg.beta = 0.05;
  cfg.min_group_size = 3;

  SUBCASE("single-camera account forms one kept group") {
    std::vector<Grid> images, residuals;
    synth_pairs(8, 800, 20, 0.05, images, residuals);
    const ClusterResult r = uci::estimate_user_fingerprints(images, den, cfg);
    REQUIRE(r.kept_fingerprints.size() == 1);
    CHECK(static_cast<int>(r.groups[static_cast<std::size_t>(r.kept_group_indices[0])]
                               .members.size()) >= cfg.min_group_size);
  }
  SUBCASE("two-camera account separates with high pairwise precision") {
    std::vector<Grid> images, residuals;
    synth_pairs(9, 900, 20, 0.05, images, residuals);
    synth_pairs(10, 1000, 20, 0.05, images, residuals);
    const ClusterResult r = uci::estimate_user_fingerprints(images, den, cfg);
    CHECK(r.kept_fingerprints.size() == 2);

    std::vector<std::vector<int>> pred;
    for (const ImageGroup& g : r.groups) pred.push_back(g.members);
    std::vector<int> labels(40, 0);
    for (int i = 20; i < 40; ++i) labels[static_cast<std::size_t>(i)] = 1;
    const auto pr = uci::pairwise_precision_recall(pred, labels, uci::EvalMode::Strict);
    REQUIRE(pr.precision.has_value());
    CHECK(*pr.precision >= 0.95);
  }
  SUBCASE("two images from different cameras, high alpha: all rejected") {
    std::vector<Grid> images, residuals;
    synth_pairs(11, 1100, 1, 0.05, images, residuals);
    synth_pairs(12, 1200, 1, 0.05, images, residuals);
    ClusterConfig strict = cfg;
    strict.alpha = 0.9;
    strict.beta = 0.9;
    const ClusterResult r = uci::estimate_user_fingerprints(images, den, strict);
    CHECK(r.groups.empty());
    CHECK(r.rejected_ids == std::vector<int>{0, 1});
  }
  SUBCASE("repost group below lambda is filtered, own cameras kept") {
    std::vector<Grid> images, residuals;
    synth_pairs(13, 1300, 12, 0.05, images, residuals);  // own camera
    synth_pairs(14, 1400, 5, 0.05, images, residuals);   // 5 foreign reposts
    ClusterConfig six = cfg;
    six.min_group_size = 6;
    const ClusterResult r = uci::estimate_user_fingerprints(images, den, six);
    REQUIRE(r.kept_group_indices.size() == 1);
    const auto& kept_members =
        r.groups[static_cast<std::size_t>(r.kept_group_indices[0])].members;
    for (int m : kept_members) CHECK(m < 12);
    CHECK(kept_members.size() == 12);
  }
  SUBCASE("fewer than two usable images") {
    std::vector<Grid> one;
    one.push_back(oracle::random_grid(1, 64, 64));
    CHECK_THROWS_AS(uci::estimate_user_fingerprints(one, den, cfg), uci::NotEnoughImages);
  }
  SUBCASE("saturated frames are quarantined, not fatal") {
    std::vector<Grid> images, residuals;
    synth_pairs(15, 1500, 6, 0.05, images, residuals);
    images.push_back(Grid::Constant(64, 64, 255.0));
    const ClusterResult r = uci::estimate_user_fingerprints(images, den, cfg);
    REQUIRE(!r.rejected_ids.empty());
    CHECK(std::count(r.rejected_ids.begin(), r.rejected_ids.end(), 6) == 1);
    bool found_reason = false;
    for (const TraceEvent& e : r.trace)
      if (e.kind == TraceEvent::Kind::Reject && e.a == 6 && e.reason == "constant_residual")
        found_reason = true;
    CHECK(found_reason);
  }
}

TEST_CASE("clustering invariants on randomized accounts") {
  const uci::DenoiserConfig den;
  for (std::uint32_t trial = 0; trial < 12; ++trial) {
    std::vector<Grid> images, residuals;
    const int cams = 1 + static_cast<int>(trial % 3);
    int id_base = 0;
    for (int c = 0; c < cams; ++c) {
      const int n = 2 + static_cast<int>((trial * 7 + static_cast<std::uint32_t>(c) * 3) % 5);
      synth_pairs(2000 + trial * 10 + static_cast<std::uint64_t>(c),
                  30000 + trial * 100 + static_cast<std::uint64_t>(c) * 20, n, 0.05, images,
                  residuals, {32, 32});
      id_base += n;
    }
    ClusterConfig cfg;
    cfg.alpha = 0.05 + 0.1 * static_cast<double>(trial % 4);
    cfg.beta = cfg.alpha / 2;
    cfg.min_group_size = 2 + static_cast<int>(trial % 3);

    const ClusterResult r = uci::cluster_residuals(images, residuals, cfg);

    // Partition: groups plus rejects cover every id exactly once.
    std::size_t total = r.rejected_ids.size();
    for (const ImageGroup& g : r.groups) total += g.members.size();
    CHECK(total == images.size());
    CHECK(member_set(r).size() == images.size());

    // Fingerprint consistency with the batch estimator over exact members.
    for (const ImageGroup& g : r.groups) {
      std::vector<Grid> gi, gr;
      for (int m : g.members) {
        gi.push_back(images[static_cast<std::size_t>(m)]);
        gr.push_back(residuals[static_cast<std::size_t>(m)]);
      }
      const uci::CameraFingerprint batch = uci::estimate_fingerprint(gi, gr);
      CHECK((g.fingerprint.values - batch.values).abs().maxCoeff() < 1e-9);
      CHECK(g.fingerprint.support_count == batch.support_count);
    }

    // Monotone growth: each image is seeded or assigned at most once.
    std::map<int, int> touches;
    int seed_count = 0;
    int max_iter = 0;
    for (const TraceEvent& e : r.trace) {
      max_iter = std::max(max_iter, e.iteration);
      if (e.kind == TraceEvent::Kind::Seed) {
        ++seed_count;
        ++touches[e.a];
        ++touches[e.b];
      } else if (e.kind == TraceEvent::Kind::Assign) {
        ++touches[e.a];
      }
    }
    for (const auto& [id, n] : touches) CHECK(n == 1);

    // Termination within the stated bound.
    CHECK(max_iter <= static_cast<int>(images.size()) + seed_count);

    // Bit-identical re-run.
    const ClusterResult r2 = uci::cluster_residuals(images, residuals, cfg);
    CHECK(r.trace == r2.trace);
    REQUIRE(r.groups.size() == r2.groups.size());
    for (std::size_t g = 0; g < r.groups.size(); ++g) {
      CHECK(r.groups[g].members == r2.groups[g].members);
      CHECK((r.groups[g].fingerprint.values == r2.groups[g].fingerprint.values).all());
    }
  }
}

TEST_CASE("trace serializes as one JSON object per line") {
  std::vector<Grid> images, residuals;
  synth_pairs(16, 1600, 6, 0.05, images, residuals, {32, 32});
  images.push_back(Grid::Constant(32, 32, 255.0));
  residuals.push_back(Grid::Constant(32, 32, 0.0));
  ClusterConfig cfg;
  const ClusterResult r = uci::cluster_residuals(images, residuals, cfg);
  const std::string jsonl = uci::trace_to_jsonl(r.trace);

  std::size_t lines = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    const std::size_t end = jsonl.find('\n', start);
    REQUIRE(end != std::string::npos);
    const nlohmann::json j = nlohmann::json::parse(jsonl.substr(start, end - start));
    CHECK(j.contains("event"));
    CHECK(j.contains("iter"));
    ++lines;
    start = end + 1;
  }
  CHECK(lines == r.trace.size());
}
