#include "uci/identity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "uci/parallel.hpp"

namespace uci {

namespace {
constexpr double kNoEvidence = std::numeric_limits<double>::quiet_NaN();
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "scf") return Scheme::Scf;
  if (s == "mcf") return Scheme::Mcf;
  if (s == "uci") return Scheme::Uci;
  throw ConfigError("unknown scheme: " + s);
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Scf: return "scf";
    case Scheme::Mcf: return "mcf";
    case Scheme::Uci: return "uci";
  }
  return "?";
}

int ScoreMatrix::index_of(const std::string& id) const {
  for (int i = 0; i < static_cast<int>(ids.size()); ++i)
    if (ids[static_cast<std::size_t>(i)] == id) return i;
  throw UnknownAccount("account not in score matrix: " + id);
}

std::optional<double> account_similarity(const std::vector<CameraFingerprint>& a,
                                         const std::vector<CameraFingerprint>& b) {
  if (a.empty() || b.empty()) return std::nullopt;
  double best = -std::numeric_limits<double>::infinity();
  for (const CameraFingerprint& fa : a)
    for (const CameraFingerprint& fb : b) best = std::max(best, correlation(fa, fb));
  return best;
}

std::vector<CameraFingerprint> scheme_fingerprints(const AccountData& account, Scheme scheme,
                                                   const RunParams& params,
                                                   std::optional<ClusterResult>* clusters_out) {
  if (account.images.size() < 2) throw NotEnoughImages("account needs at least 2 images");
  if (scheme == Scheme::Scf) {
    std::vector<Grid> residuals;
    residuals.reserve(account.images.size());
    for (const Grid& g : account.images) residuals.push_back(extract_residual(g, params.denoiser));
    return {estimate_fingerprint(account.images, residuals)};
  }
  ClusterConfig cfg = params.cluster;
  if (scheme == Scheme::Mcf) cfg.min_group_size = params.gamma;
  ClusterResult result = estimate_user_fingerprints(account.images, params.denoiser, cfg);
  std::vector<CameraFingerprint> fps = result.kept_fingerprints;
  if (clusters_out) *clusters_out = std::move(result);
  return fps;
}

SchemeRun run_scheme(const std::vector<AccountData>& accounts, Scheme scheme,
                     const RunParams& params) {
  params.cluster.validate();
  params.denoiser.validate();
  if (params.gamma < 2) throw ConfigError("gamma must be >= 2");

  SchemeRun run;
  run.accounts.resize(accounts.size());
  parallel_for(static_cast<int>(accounts.size()), params.workers, [&](int i) {
    const AccountData& acc = accounts[static_cast<std::size_t>(i)];
    AccountResult& out = run.accounts[static_cast<std::size_t>(i)];
    out.account_id = acc.account_id;
    try {
      std::optional<ClusterResult> clusters;
      out.fingerprints = scheme_fingerprints(acc, scheme, params, &clusters);
      out.clusters = std::move(clusters);
    } catch (const Error& e) {
      out.fingerprints.clear();
      out.error = e.what();
    }
  });
  run.scores = score_matrix(run.accounts, params.workers);
  return run;
}

ScoreMatrix score_matrix(const std::vector<AccountResult>& accounts, int workers) {
  const int n = static_cast<int>(accounts.size());
  ScoreMatrix m;
  m.ids.reserve(accounts.size());
  for (const AccountResult& a : accounts) m.ids.push_back(a.account_id);
  m.values = Eigen::MatrixXd::Constant(n, n, kNoEvidence);

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  parallel_for(static_cast<int>(pairs.size()), workers, [&](int p) {
    const auto [i, j] = pairs[static_cast<std::size_t>(p)];
    const std::optional<double> d = account_similarity(
        accounts[static_cast<std::size_t>(i)].fingerprints,
        accounts[static_cast<std::size_t>(j)].fingerprints);
    if (d) {
      m.values(i, j) = *d;
      m.values(j, i) = *d;
    }
  });
  return m;
}

std::vector<std::string> rank_candidates(const ScoreMatrix& m, const std::string& query) {
  const int q = m.index_of(query);
  struct Cand {
    std::string id;
    double score;
    bool real;
  };
  std::vector<Cand> cands;
  for (int i = 0; i < static_cast<int>(m.ids.size()); ++i) {
    if (i == q) continue;
    const bool real = m.has(q, i);
    cands.push_back({m.ids[static_cast<std::size_t>(i)], real ? m.values(q, i) : 0.0, real});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.real != b.real) return a.real;  // NoEvidence last
    if (a.real && a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  std::vector<std::string> out;
  out.reserve(cands.size());
  for (Cand& c : cands) out.push_back(std::move(c.id));
  return out;
}

std::vector<DecidedPair> decide_pairs(const ScoreMatrix& m, double tau) {
  std::vector<DecidedPair> out;
  const int n = static_cast<int>(m.ids.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (m.has(i, j) && m.values(i, j) > tau)
        out.push_back({m.ids[static_cast<std::size_t>(i)], m.ids[static_cast<std::size_t>(j)],
                       m.values(i, j)});
  return out;
}

void write_scores_csv(const ScoreMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out << "account";
  for (const std::string& id : m.ids) out << ',' << id;
  out << '\n';
  out.precision(17);
  const int n = static_cast<int>(m.ids.size());
  for (int i = 0; i < n; ++i) {
    out << m.ids[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) {
      out << ',';
      if (i != j && m.has(i, j)) out << m.values(i, j);
    }
    out << '\n';
  }
}

void write_scores_json(const ScoreMatrix& m, const std::filesystem::path& path) {
  nlohmann::json j;
  j["accounts"] = m.ids;
  nlohmann::json rows = nlohmann::json::array();
  const int n = static_cast<int>(m.ids.size());
  for (int i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < n; ++k) {
      if (i == k || !m.has(i, k)) {
        row.push_back(nullptr);
      } else {
        row.push_back(m.values(i, k));
      }
    }
    rows.push_back(std::move(row));
  }
  j["scores"] = std::move(rows);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string());
  out << j.dump(2) << '\n';
}

ScoreMatrix load_scores_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  in >> j;
  ScoreMatrix m;
  m.ids = j.at("accounts").get<std::vector<std::string>>();
  const int n = static_cast<int>(m.ids.size());
  m.values = Eigen::MatrixXd::Constant(n, n, kNoEvidence);
  const nlohmann::json& rows = j.at("scores");
  if (static_cast<int>(rows.size()) != n) throw Error("score matrix shape mismatch");
  for (int i = 0; i < n; ++i) {
    const nlohmann::json& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<int>(row.size()) != n) throw Error("score matrix shape mismatch");
    for (int k = 0; k < n; ++k) {
      const nlohmann::json& cell = row[static_cast<std::size_t>(k)];
      if (!cell.is_null()) m.values(i, k) = cell.get<double>();
    }
  }
  return m;
}

}  // namespace uci
