#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uci/clustering.hpp"
#include "uci/fingerprint.hpp"
#include "uci/types.hpp"

namespace uci {

enum class Scheme { Scf, Mcf, Uci };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);

// One account's prepared pixel data: luminance grids, already cropped to a
// common size, plus the matching image ids.
struct AccountData {
  std::string account_id;
  std::vector<std::string> image_ids;
  std::vector<Grid> images;
};

struct RunParams {
  DenoiserConfig denoiser;
  ClusterConfig cluster;   // alpha, beta, lambda (used by UCI)
  int gamma = 2;           // MCF size filter
  int workers = 0;         // 0 = hardware concurrency
};

struct AccountResult {
  std::string account_id;
  std::vector<CameraFingerprint> fingerprints;  // what similarity sees
  std::optional<ClusterResult> clusters;        // UCI / MCF only
  std::string error;                            // non-empty -> NoEvidence account
};

// Symmetric account-similarity matrix; NaN encodes the NoEvidence sentinel
// (fingerprint-less account), which ranks below every real score.
struct ScoreMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;

  int index_of(const std::string& id) const;  // throws UnknownAccount
  bool has(int i, int j) const { return std::isfinite(values(i, j)); }
};

struct SchemeRun {
  std::vector<AccountResult> accounts;
  ScoreMatrix scores;
};

// Maximum correlation over all cross pairs of the two fingerprint sets;
// nullopt when either set is empty.
std::optional<double> account_similarity(const std::vector<CameraFingerprint>& a,
                                         const std::vector<CameraFingerprint>& b);

std::vector<CameraFingerprint> scheme_fingerprints(const AccountData& account, Scheme scheme,
                                                   const RunParams& params,
                                                   std::optional<ClusterResult>* clusters_out);

// Runs the chosen scheme on every account (per-account failures become
// NoEvidence rows, never an aborted run) and fills the all-pairs matrix.
SchemeRun run_scheme(const std::vector<AccountData>& accounts, Scheme scheme,
                     const RunParams& params);

ScoreMatrix score_matrix(const std::vector<AccountResult>& accounts, int workers = 0);

// Other accounts by descending similarity; NoEvidence last; ties by id.
std::vector<std::string> rank_candidates(const ScoreMatrix& m, const std::string& query);

struct DecidedPair {
  std::string a, b;
  double score;
};

// All unordered pairs with a real score strictly above tau.
std::vector<DecidedPair> decide_pairs(const ScoreMatrix& m, double tau);

void write_scores_csv(const ScoreMatrix& m, const std::filesystem::path& path);
void write_scores_json(const ScoreMatrix& m, const std::filesystem::path& path);
ScoreMatrix load_scores_json(const std::filesystem::path& path);

}  // namespace uci
