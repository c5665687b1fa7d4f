#pragma once

// Pointwise evaluation against future-anomaly targets. No point adjustment of
// any kind: every timestamp is scored independently, so the metrics depend
// only on the multiset of (flag, target) pairs.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "igcl/errors.hpp"
#include "igcl/mat.hpp"
#include "igcl/series.hpp"

namespace igcl {

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  long total() const { return tp + fp + fn + tn; }
};

/// Pointwise counts. Positions excluded on either side are skipped.
inline ConfusionCounts confusion_counts(const std::vector<Target>& flags,
                                        const std::vector<Target>& targets) {
  if (flags.size() != targets.size()) throw LengthMismatch("flags and targets differ in length");
  ConfusionCounts c;
  for (size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == Target::Excluded || targets[i] == Target::Excluded) continue;
    const bool f = flags[i] == Target::Positive;
    const bool y = targets[i] == Target::Positive;
    if (f && y)
      ++c.tp;
    else if (f && !y)
      ++c.fp;
    else if (!f && y)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

struct Prf {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

/// Standard definitions, zero when the denominator vanishes.
inline Prf precision_recall_f1(const ConfusionCounts& c) {
  Prf out;
  out.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
  out.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
  out.f1 = out.precision + out.recall > 0.0
               ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
               : 0.0;
  return out;
}

/// Rank-statistic AUC: the probability a random positive outranks a random
/// negative, ties counted one half. Average ranks over tie groups make this
/// identical to the pairwise count.
inline double roc_auc(const Vec& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
  long np = 0, nn = 0;
  for (int y : labels) (y == 1 ? np : nn)++;
  if (np == 0 || nn == 0) throw SingleClass("need both classes to compute ROC-AUC");

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));  // 1-based
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  return (rank_sum_pos - 0.5 * np * (np + 1.0)) / (static_cast<double>(np) * nn);
}

struct SweepResult {
  double delta = 0.0;
  double f1 = 0.0;
};

/// Exact F1 maximization over the candidate set of distinct observed scores
/// plus a sentinel above the maximum (no flags). Ties resolve to the smallest
/// delta. Flags follow flag = score >= delta.
inline SweepResult best_f1_sweep(const Vec& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw LengthMismatch("scores and labels differ in length");
  long np = 0, nn = 0;
  for (int y : labels) (y == 1 ? np : nn)++;
  if (np == 0 || nn == 0) throw SingleClass("need both classes to sweep F1");

  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return scores[a] > scores[b]; });

  SweepResult best;
  best.delta = std::numeric_limits<double>::infinity();
  best.f1 = 0.0;  // the sentinel: nothing flagged, F1 = 0 by convention
  long tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    for (size_t k = i; k < j; ++k)
      (labels[order[k]] == 1 ? tp : fp)++;
    const double delta = scores[order[i]];
    const long fn = np - tp;
    const double f1 = 2 * tp + fp + fn > 0 ? 2.0 * tp / static_cast<double>(2 * tp + fp + fn) : 0.0;
    if (f1 > best.f1 || (f1 == best.f1 && delta < best.delta)) {
      best.f1 = f1;
      best.delta = delta;
    }
    i = j;
  }
  return best;
}

struct EvalReport {
  double delta = 0.0;
  Prf fixed;
  ConfusionCounts counts;
  double auc = std::numeric_limits<double>::quiet_NaN();
  SweepResult best;
  long excluded = 0;
  long evaluated = 0;
};

inline nlohmann::json report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["delta"] = r.delta;
  j["fixed"] = {{"precision", r.fixed.precision},
                {"recall", r.fixed.recall},
                {"f1", r.fixed.f1},
                {"tp", r.counts.tp},
                {"fp", r.counts.fp},
                {"fn", r.counts.fn},
                {"tn", r.counts.tn}};
  j["best_f1"] = {{"delta", r.best.delta}, {"f1", r.best.f1}};
  if (std::isfinite(r.auc))
    j["roc_auc"] = r.auc;
  else
    j["roc_auc"] = nullptr;
  j["excluded"] = r.excluded;
  j["evaluated"] = r.evaluated;
  return j;
}

inline std::string report_to_text(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "delta      %.6g\n"
                "precision  %.4f\n"
                "recall     %.4f\n"
                "f1         %.4f\n"
                "roc_auc    %.4f\n"
                "best_f1    %.4f (delta %.6g)\n"
                "tp/fp/fn/tn  %ld/%ld/%ld/%ld   excluded %ld\n",
                r.delta, r.fixed.precision, r.fixed.recall, r.fixed.f1, r.auc, r.best.f1,
                r.best.delta, r.counts.tp, r.counts.fp, r.counts.fn, r.counts.tn, r.excluded);
  return buf;
}

}  // namespace igcl
