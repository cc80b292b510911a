#include "uci/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace uci {

namespace {

// Expands the predicted partition to the evaluated universe for the given
// mode: strict adds every labeled-but-ungrouped image as a singleton.
std::vector<std::vector<int>> effective_groups(const std::vector<std::vector<int>>& groups,
                                               int n_labels, EvalMode mode) {
  std::vector<bool> grouped(static_cast<std::size_t>(n_labels), false);
  for (const auto& g : groups)
    for (int id : g) {
      if (id < 0 || id >= n_labels) throw EmptyEvaluation("image id without a truth label");
      grouped[static_cast<std::size_t>(id)] = true;
    }
  std::vector<std::vector<int>> eff = groups;
  if (mode == EvalMode::Strict) {
    for (int i = 0; i < n_labels; ++i)
      if (!grouped[static_cast<std::size_t>(i)]) eff.push_back({i});
  }
  return eff;
}

}  // namespace

double purity(const std::vector<std::vector<int>>& groups,
              const std::vector<int>& truth_labels, EvalMode mode) {
  const auto eff = effective_groups(groups, static_cast<int>(truth_labels.size()), mode);
  std::uint64_t n = 0;
  std::uint64_t majority_sum = 0;
  for (const auto& g : eff) {
    if (g.empty()) continue;
    std::map<int, std::uint64_t> counts;
    for (int id : g) ++counts[truth_labels[static_cast<std::size_t>(id)]];
    std::uint64_t best = 0;
    for (const auto& [label, c] : counts) best = std::max(best, c);
    majority_sum += best;
    n += g.size();
  }
  if (n == 0) throw EmptyEvaluation("no evaluated images");
  return static_cast<double>(majority_sum) / static_cast<double>(n);
}

PairMetrics pairwise_precision_recall(const std::vector<std::vector<int>>& groups,
                                      const std::vector<int>& truth_labels, EvalMode mode) {
  const auto eff = effective_groups(groups, static_cast<int>(truth_labels.size()), mode);
  std::vector<int> ids;
  std::vector<int> group_of;
  for (int gi = 0; gi < static_cast<int>(eff.size()); ++gi) {
    for (int id : eff[static_cast<std::size_t>(gi)]) {
      ids.push_back(id);
      group_of.push_back(gi);
    }
  }
  if (ids.empty()) throw EmptyEvaluation("no evaluated images");

  PairMetrics out;
  const int n = static_cast<int>(ids.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const bool same_group = group_of[static_cast<std::size_t>(a)] == group_of[static_cast<std::size_t>(b)];
      const bool same_camera = truth_labels[static_cast<std::size_t>(ids[static_cast<std::size_t>(a)])] ==
                               truth_labels[static_cast<std::size_t>(ids[static_cast<std::size_t>(b)])];
      if (same_group && same_camera) ++out.counts.tp;
      else if (same_group && !same_camera) ++out.counts.fp;
      else if (!same_group && same_camera) ++out.counts.fn;
      else ++out.counts.tn;
    }
  }
  if (out.counts.tp + out.counts.fp > 0)
    out.precision = static_cast<double>(out.counts.tp) /
                    static_cast<double>(out.counts.tp + out.counts.fp);
  if (out.counts.tp + out.counts.fn > 0)
    out.recall = static_cast<double>(out.counts.tp) /
                 static_cast<double>(out.counts.tp + out.counts.fn);
  return out;
}

MapResult mean_average_precision(
    const ScoreMatrix& scores,
    const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& labels) {
  const int n = static_cast<int>(scores.ids.size());
  if (labels.rows() != n || labels.cols() != n) throw DimensionMismatch("label matrix shape");

  MapResult res;
  double ap_sum = 0.0;
  for (int q = 0; q < n; ++q) {
    struct Cand {
      double score;
      bool real;
      bool positive;
      int id;
    };
    std::vector<Cand> cands;
    int positives = 0;
    for (int i = 0; i < n; ++i) {
      if (i == q) continue;
      const PairLabel lab = static_cast<PairLabel>(labels(q, i));
      if (lab == PairLabel::Excluded) continue;
      const bool positive = lab == PairLabel::Positive;
      positives += positive ? 1 : 0;
      cands.push_back({scores.has(q, i) ? scores.values(q, i) : 0.0, scores.has(q, i), positive, i});
    }
    if (positives == 0) {
      ++res.skipped;
      continue;
    }
    // Pessimistic tie handling: at equal score the negative is ranked first.
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.real != b.real) return a.real;
      if (a.real && a.score != b.score) return a.score > b.score;
      if (a.positive != b.positive) return !a.positive;
      return a.id < b.id;
    });
    double ap = 0.0;
    int hit = 0;
    for (int r = 0; r < static_cast<int>(cands.size()); ++r) {
      if (cands[static_cast<std::size_t>(r)].positive) {
        ++hit;
        ap += static_cast<double>(hit) / static_cast<double>(r + 1);
      }
    }
    ap /= static_cast<double>(positives);
    ap_sum += ap;
    ++res.queries;
  }
  if (res.queries > 0) res.map = ap_sum / static_cast<double>(res.queries);
  return res;
}

RocCurve roc_points(const std::vector<ScoredPair>& pairs) {
  std::uint64_t npos = 0, nneg = 0;
  for (const ScoredPair& p : pairs) (p.positive ? npos : nneg) += 1;
  if (npos == 0 || nneg == 0) throw DegenerateRoc("need at least one positive and one negative pair");

  std::vector<ScoredPair> sorted = pairs;
  std::sort(sorted.begin(), sorted.end(),
            [](const ScoredPair& a, const ScoredPair& b) { return a.score > b.score; });

  RocCurve curve;
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double t = sorted[i].score;
    // Consume every pair tied at this threshold jointly.
    while (i < sorted.size() && sorted[i].score == t) {
      (sorted[i].positive ? tp : fp) += 1;
      ++i;
    }
    const double fpr = static_cast<double>(fp) / static_cast<double>(nneg);
    const double tpr = static_cast<double>(tp) / static_cast<double>(npos);
    curve.points.push_back({t, fpr, tpr});
    curve.auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  if (prev_fpr != 1.0 || prev_tpr != 1.0) {
    curve.points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});
    curve.auc += (1.0 - prev_fpr) * (1.0 + prev_tpr) / 2.0;
  }
  return curve;
}

std::vector<ScoredPair> scored_pairs_from_matrix(
    const ScoreMatrix& scores,
    const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& labels) {
  const int n = static_cast<int>(scores.ids.size());
  if (labels.rows() != n || labels.cols() != n) throw DimensionMismatch("label matrix shape");
  std::vector<ScoredPair> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const PairLabel lab = static_cast<PairLabel>(labels(i, j));
      if (lab == PairLabel::Excluded) continue;
      const double s = scores.has(i, j) ? scores.values(i, j)
                                        : -std::numeric_limits<double>::infinity();
      out.push_back({s, lab == PairLabel::Positive});
    }
  }
  return out;
}

RocCurve roc_from_matrix(const ScoreMatrix& scores,
                         const Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>& labels) {
  return roc_points(scored_pairs_from_matrix(scores, labels));
}

RepostRatios repost_removal_ratios(const ClusterResult& result,
                                   const std::vector<bool>& repost_flags) {
  std::set<int> kept_members;
  for (int gi : result.kept_group_indices)
    for (int id : result.groups[static_cast<std::size_t>(gi)].members) kept_members.insert(id);

  std::uint64_t reposted = 0, reposted_removed = 0, own = 0, own_removed = 0;
  for (int id = 0; id < static_cast<int>(repost_flags.size()); ++id) {
    const bool in_kept = kept_members.count(id) > 0;
    if (repost_flags[static_cast<std::size_t>(id)]) {
      ++reposted;
      if (!in_kept) ++reposted_removed;
    } else {
      ++own;
      if (!in_kept) ++own_removed;
    }
  }
  RepostRatios out;
  if (reposted > 0)
    out.removed_repost = static_cast<double>(reposted_removed) / static_cast<double>(reposted);
  out.false_rejected = own > 0 ? static_cast<double>(own_removed) / static_cast<double>(own) : 0.0;
  return out;
}

}  // namespace uci
