#include "uci/clustering.hpp"

#include <algorithm>
#include <limits>

#include <json.hpp>

namespace uci {

void ClusterConfig::validate() const {
  if (!(beta > 0.0) || !(beta <= alpha) || !(alpha < 1.0)) {
    throw ConfigError("thresholds must satisfy 0 < beta <= alpha < 1");
  }
  if (min_group_size < 2) throw ConfigError("min_group_size must be >= 2");
}

Eigen::MatrixXd pairwise_residual_correlations(const std::vector<Grid>& residuals) {
  const int n = static_cast<int>(residuals.size());
  if (n < 2) throw NotEnoughImages("need at least 2 residuals");
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double r = correlation(residuals[static_cast<std::size_t>(j)],
                                   residuals[static_cast<std::size_t>(k)]);
      m(j, k) = r;
      m(k, j) = r;
    }
  }
  return m;
}

namespace {

ImageGroup make_group(int j, int k, const std::vector<Grid>& images,
                      const std::vector<Grid>& residuals) {
  ImageGroup g;
  g.members = {j, k};
  accumulate(g.acc, images[static_cast<std::size_t>(j)], residuals[static_cast<std::size_t>(j)]);
  accumulate(g.acc, images[static_cast<std::size_t>(k)], residuals[static_cast<std::size_t>(k)]);
  g.fingerprint = finalize(g.acc);
  return g;
}

}  // namespace

std::vector<ImageGroup> select_seeds(const Eigen::MatrixXd& corr,
                                     const std::vector<Grid>& images,
                                     const std::vector<Grid>& residuals,
                                     double alpha,
                                     std::vector<int>& pool,
                                     std::vector<TraceEvent>& trace,
                                     int iteration) {
  const int n = static_cast<int>(corr.rows());
  struct Pair {
    double corr;
    int j, k;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) pairs.push_back({corr(j, k), j, k});
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.corr != b.corr) return a.corr > b.corr;
    if (a.j != b.j) return a.j < b.j;
    return a.k < b.k;
  });

  std::vector<bool> used(static_cast<std::size_t>(n), false);
  std::vector<ImageGroup> groups;
  for (const Pair& p : pairs) {
    if (p.corr < alpha) break;
    if (used[static_cast<std::size_t>(p.j)] || used[static_cast<std::size_t>(p.k)]) continue;
    used[static_cast<std::size_t>(p.j)] = true;
    used[static_cast<std::size_t>(p.k)] = true;
    groups.push_back(make_group(p.j, p.k, images, residuals));
    trace.push_back({TraceEvent::Kind::Seed, iteration, p.j, p.k, p.corr, {}});
  }
  for (int i = 0; i < n; ++i)
    if (!used[static_cast<std::size_t>(i)]) pool.push_back(i);
  return groups;
}

void merge_groups(std::vector<ImageGroup>& groups, double alpha,
                  std::vector<TraceEvent>& trace, int iteration) {
  while (groups.size() >= 2) {
    const int g = static_cast<int>(groups.size());
    double best = -std::numeric_limits<double>::infinity();
    int bj = -1, bk = -1;
    for (int j = 0; j < g; ++j) {
      for (int k = j + 1; k < g; ++k) {
        const double r = correlation(groups[static_cast<std::size_t>(j)].fingerprint,
                                     groups[static_cast<std::size_t>(k)].fingerprint);
        if (r > best) {
          best = r;
          bj = j;
          bk = k;
        }
      }
    }
    if (!(best > alpha)) break;
    ImageGroup& dst = groups[static_cast<std::size_t>(bj)];
    ImageGroup& src = groups[static_cast<std::size_t>(bk)];
    dst.members.insert(dst.members.end(), src.members.begin(), src.members.end());
    merge(dst.acc, src.acc);
    dst.fingerprint = finalize(dst.acc);
    groups.erase(groups.begin() + bk);
    trace.push_back({TraceEvent::Kind::Merge, iteration, bj, bk, best, {}});
  }
}

int assign_remaining(std::vector<ImageGroup>& groups,
                     std::vector<int>& pool,
                     const std::vector<Grid>& images,
                     const std::vector<Grid>& residuals,
                     double beta,
                     std::vector<TraceEvent>& trace,
                     int iteration) {
  if (groups.empty() || pool.empty()) return 0;

  // corr(residual of pool[i], fingerprint of groups[k]); column k is refreshed
  // whenever group k absorbs an image.
  Eigen::MatrixXd rho(static_cast<int>(pool.size()), static_cast<int>(groups.size()));
  for (int i = 0; i < rho.rows(); ++i)
    for (int k = 0; k < rho.cols(); ++k)
      rho(i, k) = correlation(residuals[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])],
                              groups[static_cast<std::size_t>(k)].fingerprint.values);

  int assigned = 0;
  while (!pool.empty()) {
    double best = -std::numeric_limits<double>::infinity();
    int bi = -1, bk = -1;
    for (int i = 0; i < rho.rows(); ++i) {
      for (int k = 0; k < rho.cols(); ++k) {
        const double r = rho(i, k);
        const bool better =
            r > best ||
            (r == best && (pool[static_cast<std::size_t>(i)] < pool[static_cast<std::size_t>(bi)] ||
                           (pool[static_cast<std::size_t>(i)] == pool[static_cast<std::size_t>(bi)] && k < bk)));
        if (better) {
          best = r;
          bi = i;
          bk = k;
        }
      }
    }
    if (!(best >= beta)) break;

    const int image_id = pool[static_cast<std::size_t>(bi)];
    ImageGroup& grp = groups[static_cast<std::size_t>(bk)];
    grp.members.push_back(image_id);
    accumulate(grp.acc, images[static_cast<std::size_t>(image_id)],
               residuals[static_cast<std::size_t>(image_id)]);
    grp.fingerprint = finalize(grp.acc);
    trace.push_back({TraceEvent::Kind::Assign, iteration, image_id, bk, best, {}});
    ++assigned;

    pool.erase(pool.begin() + bi);
    // Drop the assigned image's row, then refresh the updated group's column.
    Eigen::MatrixXd next(rho.rows() - 1, rho.cols());
    for (int i = 0, o = 0; i < rho.rows(); ++i) {
      if (i == bi) continue;
      next.row(o++) = rho.row(i);
    }
    rho = std::move(next);
    for (int i = 0; i < rho.rows(); ++i)
      rho(i, bk) = correlation(residuals[static_cast<std::size_t>(pool[static_cast<std::size_t>(i)])],
                               grp.fingerprint.values);
  }
  return assigned;
}

std::vector<CameraFingerprint> filter_small_groups(const std::vector<ImageGroup>& groups,
                                                   int min_group_size) {
  std::vector<CameraFingerprint> kept;
  for (const ImageGroup& g : groups) {
    if (static_cast<int>(g.members.size()) >= min_group_size) kept.push_back(g.fingerprint);
  }
  return kept;
}

ClusterResult cluster_residuals(const std::vector<Grid>& images,
                                const std::vector<Grid>& residuals,
                                const ClusterConfig& cluster) {
  cluster.validate();
  if (images.size() != residuals.size()) throw DimensionMismatch("images/residuals size mismatch");

  ClusterResult result;

  // Quarantine degenerate residuals so one saturated frame cannot abort the
  // whole account. A constant image reconstructs with only float rounding
  // left over, so near-zero spread counts as constant.
  std::vector<int> usable;
  for (int i = 0; i < static_cast<int>(residuals.size()); ++i) {
    const Grid& r = residuals[static_cast<std::size_t>(i)];
    const double spread = r.maxCoeff() - r.minCoeff();
    if (spread < 1e-9) {
      result.rejected_ids.push_back(i);
      result.trace.push_back({TraceEvent::Kind::Reject, 0, i, -1, 0.0, "constant_residual"});
    } else {
      usable.push_back(i);
    }
  }
  if (usable.size() < 2) throw NotEnoughImages("need at least 2 usable images");

  std::vector<Grid> sub_images, sub_residuals;
  sub_images.reserve(usable.size());
  sub_residuals.reserve(usable.size());
  for (int id : usable) {
    sub_images.push_back(images[static_cast<std::size_t>(id)]);
    sub_residuals.push_back(residuals[static_cast<std::size_t>(id)]);
  }

  const Eigen::MatrixXd corr = pairwise_residual_correlations(sub_residuals);

  std::vector<int> pool;
  std::vector<TraceEvent> trace;
  std::vector<ImageGroup> groups =
      select_seeds(corr, sub_images, sub_residuals, cluster.alpha, pool, trace, 0);
  const std::size_t initial_groups = groups.size();

  const int iteration_bound = static_cast<int>(usable.size() + initial_groups) + 1;
  int iteration = 0;
  while (true) {
    ++iteration;
    if (iteration > iteration_bound) throw Error("clustering failed to terminate");
    merge_groups(groups, cluster.alpha, trace, iteration);
    const int assigned =
        assign_remaining(groups, pool, sub_images, sub_residuals, cluster.beta, trace, iteration);
    if (assigned == 0) break;
  }

  for (int i : pool) {
    double best = -std::numeric_limits<double>::infinity();
    for (const ImageGroup& g : groups) {
      best = std::max(best, correlation(sub_residuals[static_cast<std::size_t>(i)],
                                        g.fingerprint.values));
    }
    trace.push_back({TraceEvent::Kind::Reject, iteration, usable[static_cast<std::size_t>(i)], -1,
                     groups.empty() ? 0.0 : best, "below_beta"});
  }

  // Map local indices back to the caller's image ids.
  for (ImageGroup& g : groups)
    for (int& m : g.members) m = usable[static_cast<std::size_t>(m)];
  for (TraceEvent& e : trace) {
    switch (e.kind) {
      case TraceEvent::Kind::Seed:
        e.a = usable[static_cast<std::size_t>(e.a)];
        e.b = usable[static_cast<std::size_t>(e.b)];
        break;
      case TraceEvent::Kind::Assign:
        e.a = usable[static_cast<std::size_t>(e.a)];
        break;
      default:
        break;  // merge carries group ids; rejects were mapped when emitted
    }
  }
  for (int i : pool) result.rejected_ids.push_back(usable[static_cast<std::size_t>(i)]);
  std::sort(result.rejected_ids.begin(), result.rejected_ids.end());

  result.groups = std::move(groups);
  result.trace.insert(result.trace.end(), trace.begin(), trace.end());
  for (int gi = 0; gi < static_cast<int>(result.groups.size()); ++gi) {
    const ImageGroup& g = result.groups[static_cast<std::size_t>(gi)];
    if (static_cast<int>(g.members.size()) >= cluster.min_group_size) {
      result.kept_group_indices.push_back(gi);
      result.kept_fingerprints.push_back(g.fingerprint);
    }
  }
  return result;
}

ClusterResult estimate_user_fingerprints(const std::vector<Grid>& images,
                                         const DenoiserConfig& denoiser,
                                         const ClusterConfig& cluster) {
  if (images.size() < 2) throw NotEnoughImages("need at least 2 images");
  std::vector<Grid> residuals;
  residuals.reserve(images.size());
  for (const Grid& g : images) residuals.push_back(extract_residual(g, denoiser));
  return cluster_residuals(images, residuals, cluster);
}

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace) {
  std::string out;
  for (const TraceEvent& e : trace) {
    nlohmann::json j;
    j["iter"] = e.iteration;
    switch (e.kind) {
      case TraceEvent::Kind::Seed:
        j["event"] = "seed";
        j["image_a"] = e.a;
        j["image_b"] = e.b;
        j["corr"] = e.corr;
        break;
      case TraceEvent::Kind::Merge:
        j["event"] = "merge";
        j["group_a"] = e.a;
        j["group_b"] = e.b;
        j["corr"] = e.corr;
        break;
      case TraceEvent::Kind::Assign:
        j["event"] = "assign";
        j["image"] = e.a;
        j["group"] = e.b;
        j["corr"] = e.corr;
        break;
      case TraceEvent::Kind::Reject:
        j["event"] = "reject";
        j["image"] = e.a;
        j["corr"] = e.corr;
        j["reason"] = e.reason;
        break;
    }
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace uci
