#pragma once

#include <string>
#include <vector>

#include "uci/fingerprint.hpp"
#include "uci/imaging.hpp"
#include "uci/types.hpp"

namespace uci {

struct ClusterConfig {
  double alpha = 0.10;     // seed / merge correlation threshold
  double beta = 0.05;      // assignment correlation threshold
  int min_group_size = 3;  // groups below this size are dropped from the kept set

  void validate() const;
};

struct ImageGroup {
  std::vector<int> members;  // image indices, in assignment order
  WeightedAccumulator acc;
  CameraFingerprint fingerprint;
};

struct TraceEvent {
  enum class Kind { Seed, Merge, Assign, Reject };
  Kind kind;
  int iteration = 0;
  int a = -1;  // seed: first image; merge: surviving group; assign/reject: image
  int b = -1;  // seed: second image; merge: absorbed group; assign: group
  double corr = 0.0;
  std::string reason;  // reject events only

  bool operator==(const TraceEvent&) const = default;
};

struct ClusterResult {
  std::vector<ImageGroup> groups;
  std::vector<int> rejected_ids;
  std::vector<int> kept_group_indices;
  std::vector<CameraFingerprint> kept_fingerprints;
  std::vector<TraceEvent> trace;
};

// Symmetric residual-correlation matrix with unit diagonal.
// Throws UndefinedCorrelation when a residual is constant; the account-level
// pipeline quarantines such images before calling this.
Eigen::MatrixXd pairwise_residual_correlations(const std::vector<Grid>& residuals);

// Scans pairs in descending correlation order (ties by lexicographic (j, k));
// a pair at or above alpha whose images are both unused founds a 2-image
// group. Returns the founded groups and appends the leftover image indices
// to pool. Trace seed events are appended with the given iteration index.
std::vector<ImageGroup> select_seeds(const Eigen::MatrixXd& corr,
                                     const std::vector<Grid>& images,
                                     const std::vector<Grid>& residuals,
                                     double alpha,
                                     std::vector<int>& pool,
                                     std::vector<TraceEvent>& trace,
                                     int iteration);

// Repeatedly merges the highest-correlated group pair while corr > alpha
// (strict), lexicographic tie-break, recomputing fingerprints as it goes.
void merge_groups(std::vector<ImageGroup>& groups, double alpha,
                  std::vector<TraceEvent>& trace, int iteration);

// One image per step: the (pool image, group) pair with the globally maximal
// correlation joins while that maximum is >= beta; the group fingerprint is
// refreshed before the next step. Assigned images are removed from pool.
// Returns the number of images assigned.
int assign_remaining(std::vector<ImageGroup>& groups,
                     std::vector<int>& pool,
                     const std::vector<Grid>& images,
                     const std::vector<Grid>& residuals,
                     double beta,
                     std::vector<TraceEvent>& trace,
                     int iteration);

std::vector<CameraFingerprint> filter_small_groups(const std::vector<ImageGroup>& groups,
                                                   int min_group_size);

// Full account pipeline: residual extraction, pairwise correlations, seeding,
// then alternating merge / assign passes until an iteration assigns nothing,
// then the minimum-size filter. Images with constant residuals are quarantined
// into rejected_ids up front.
ClusterResult estimate_user_fingerprints(const std::vector<Grid>& images,
                                         const DenoiserConfig& denoiser,
                                         const ClusterConfig& cluster);

// Same pipeline on precomputed residuals (the images are still needed for the
// fingerprint estimator's weights).
ClusterResult cluster_residuals(const std::vector<Grid>& images,
                                const std::vector<Grid>& residuals,
                                const ClusterConfig& cluster);

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace);

}  // namespace uci
