#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uci/clustering.hpp"
#include "uci/identity.hpp"

namespace uci {

// How images that ended up in no group are treated by the clustering metrics:
// Strict counts each one as its own singleton group, Lenient drops them.
enum class EvalMode { Strict, Lenient };

enum class PairLabel { Positive, Negative, Excluded };

struct PairCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
};

struct PairMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  PairCounts counts;
};

// groups: predicted partition as lists of image indices into truth_labels.
// Every evaluated image must have a label; indices absent from all groups are
// the rejected set.
double purity(const std::vector<std::vector<int>>& groups,
              const std::vector<int>& truth_labels, EvalMode mode);

PairMetrics pairwise_precision_recall(const std::vector<std::vector<int>>& groups,
                                      const std::vector<int>& truth_labels, EvalMode mode);

struct MapResult {
  double map = 0.0;
  int queries = 0;
  int skipped = 0;  // queries without a positive
};

// Labels are aligned with the score matrix: labels(i, j) holds the pair label
// of accounts i and j. Excluded pairs are removed from each ranking; ties are
// broken pessimistically (negatives first). NoEvidence ranks below all real
// scores.
MapResult mean_average_precision(const ScoreMatrix& scores,
                                 const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& labels);

struct RocPoint {
  double threshold;
  double fpr;
  double tpr;
};

struct RocCurve {
  std::vector<RocPoint> points;  // includes (0,0) and (1,1)
  double auc = 0.0;
};

struct ScoredPair {
  double score;  // -inf encodes NoEvidence
  bool positive;
};

RocCurve roc_points(const std::vector<ScoredPair>& pairs);

// Convenience adapter: collects positive/negative pairs from a score matrix,
// dropping excluded ones.
RocCurve roc_from_matrix(const ScoreMatrix& scores,
                         const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& labels);

std::vector<ScoredPair> scored_pairs_from_matrix(
    const ScoreMatrix& scores,
    const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& labels);

struct RepostRatios {
  std::optional<double> removed_repost;  // nullopt when no reposts exist
  double false_rejected = 0.0;
};

// Kept-group membership versus ground-truth repost flags (indexed by image).
RepostRatios repost_removal_ratios(const ClusterResult& result,
                                   const std::vector<bool>& repost_flags);

}  // namespace uci
