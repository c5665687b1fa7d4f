#pragma once

// Inference: sliding-window anomaly-prediction scores from a frozen model.
// No sampling happens here — the denoiser is unused and only the stored bank
// patterns generate negatives. The score at t is
//
//   p_t = sum_{j=1..K} Sim(z+_t, z-_{t,j}) - sum_{j=1..P} Sim(z+_t, z+_{t-j})
//
// so a window that stops resembling its own recent context and starts
// resembling stored precursor perturbations scores high. Strictly causal:
// the score at t sees data up to t only.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "igcl/contrastive.hpp"
#include "igcl/encoder.hpp"
#include "igcl/evaluation.hpp"
#include "igcl/memory_bank.hpp"
#include "igcl/model.hpp"
#include "igcl/series.hpp"

namespace igcl {

struct ScoreSeries {
  std::vector<double> score;     // NaN where excluded
  std::vector<uint8_t> excluded; // 1 where no score exists
  std::vector<uint8_t> flags;    // flag_t = score_t >= delta
  double delta = std::numeric_limits<double>::quiet_NaN();

  int length() const { return static_cast<int>(score.size()); }
};

inline double score_from_sims(const Vec& negative_sims, const Vec& positive_sims) {
  double s = 0.0;
  for (double x : negative_sims) s += x;
  for (double x : positive_sims) s -= x;
  return s;
}

/// Score for one segment whose anchor is the timestamp being judged.
inline double anomaly_score(const ModelState& state, const WindowSegment& segment) {
  const TrainConfig& cfg = state.config;
  if (segment.lookback != cfg.lookback || segment.batch != cfg.batch)
    throw ShapeMismatch("segment was built with h=" + std::to_string(segment.lookback) + ", b=" +
                        std::to_string(segment.batch) + "; model expects h=" +
                        std::to_string(cfg.lookback) + ", b=" + std::to_string(cfg.batch));
  if (segment.length() < cfg.positives + 1)
    throw InsufficientHistory("segment too short for P positives");

  NormalizedSegment norm = instance_normalize(segment, cfg.epsilon);
  AuxAttributes aux;
  if (state.encoder.cfg.aux_dim > 0) {
    if (segment.timestamps.empty())
      throw ShapeMismatch("model was built with time attributes but the segment has no timestamps");
    aux = encode_time_attributes(segment.timestamps);
  }

  EncodeCache cache;
  RepresentationTrack track = encode_track(state.encoder, norm, aux, &cache);
  const int len = norm.length(), d = cfg.dim;
  const double* z_t = track.z.row(len - 1);

  Vec pos_sims(cfg.positives);
  for (int j = 1; j <= cfg.positives; ++j)
    pos_sims[j - 1] = similarity(z_t, track.z.row(len - 1 - j), d, cfg.similarity);

  const int w = cfg.lookback + 1;
  const int start = len - w;
  Vec neg_sims;
  neg_sims.reserve(state.bank.size());
  for (const MemoryEntry& e : state.bank.entries) {
    Mat window(norm.vars(), w);
    for (int v = 0; v < norm.vars(); ++v)
      for (int i = 0; i < w; ++i)
        window(v, i) = state.bank.literal_windows ? e.pattern(v, i)
                                                  : norm.data(v, start + i) + e.pattern(v, i);
    Mat reps = encode_window_override(state.encoder, cache, window, aux);
    neg_sims.push_back(similarity(z_t, reps.row(w - 1), d, cfg.similarity));
  }
  return score_from_sims(neg_sims, pos_sims);
}

/// Scores every stride-th timestamp that has b+h history; everything else is
/// excluded. Appending future data never changes an earlier score.
inline ScoreSeries score_series(const ModelState& state, const SeriesFrame& frame, int stride = 1) {
  if (stride < 1) throw OutOfRange("stride must be at least 1");
  const TrainConfig& cfg = state.config;
  const int first = cfg.batch + cfg.lookback - 1;
  ScoreSeries out;
  out.score.assign(frame.length(), std::numeric_limits<double>::quiet_NaN());
  out.excluded.assign(frame.length(), 1);
  out.flags.assign(frame.length(), 0);
  for (int t = first; t < frame.length(); t += stride) {
    WindowSegment seg = make_segment(frame, t, cfg.lookback, cfg.batch);
    out.score[t] = anomaly_score(state, seg);
    out.excluded[t] = 0;
  }
  return out;
}

/// Sets delta and the derived flags (flag_t = score_t >= delta).
inline void apply_threshold(ScoreSeries& scores, double delta) {
  scores.delta = delta;
  for (int t = 0; t < scores.length(); ++t)
    scores.flags[t] = (!scores.excluded[t] && scores.score[t] >= delta) ? 1 : 0;
}

/// Unsupervised threshold: the q-th lower empirical quantile of the
/// calibration scores.
inline double calibrate_threshold(const ScoreSeries& scores, double quantile = 0.95) {
  if (!(0.0 <= quantile && quantile <= 1.0)) throw BadRange("quantile must lie in [0, 1]");
  Vec vals;
  for (int t = 0; t < scores.length(); ++t)
    if (!scores.excluded[t]) vals.push_back(scores.score[t]);
  if (vals.empty()) throw EmptyScores("no scores to calibrate on");
  std::sort(vals.begin(), vals.end());
  const int n = static_cast<int>(vals.size());
  int idx = static_cast<int>(std::ceil(quantile * n)) - 1;
  idx = std::clamp(idx, 0, n - 1);
  return vals[idx];
}

/// Supervised threshold for evaluation use: the delta maximizing F1 against
/// the targets.
inline double calibrate_threshold_best_f1(const ScoreSeries& scores,
                                          const std::vector<Target>& targets) {
  if (scores.length() != static_cast<int>(targets.size()))
    throw LengthMismatch("scores and targets differ in length");
  Vec s;
  std::vector<int> y;
  for (int t = 0; t < scores.length(); ++t) {
    if (scores.excluded[t] || targets[t] == Target::Excluded) continue;
    s.push_back(scores.score[t]);
    y.push_back(targets[t] == Target::Positive ? 1 : 0);
  }
  if (s.empty()) throw EmptyScores("no evaluable scores");
  return best_f1_sweep(s, y).delta;
}

/// A raised flag ahead of a labeled anomaly onset: the earliest flagged
/// timestamp within [onset - h - f, onset). Lead times are strictly positive;
/// a flag exactly at the onset is not a warning.
struct Warning {
  int onset = 0;
  int first_flag = 0;
  int lead = 0;
};

/// Full evaluation of a thresholded score series against targets: fixed-delta
/// confusion, ROC-AUC, and the best-F1 sweep. Positions excluded on either
/// side are dropped and counted.
inline EvalReport evaluate_scores(const ScoreSeries& scores, const std::vector<Target>& targets) {
  if (scores.length() != static_cast<int>(targets.size()))
    throw LengthMismatch("scores and targets differ in length");
  EvalReport r;
  r.delta = scores.delta;
  std::vector<Target> flag_targets(scores.length(), Target::Excluded);
  for (int t = 0; t < scores.length(); ++t)
    if (!scores.excluded[t])
      flag_targets[t] = scores.flags[t] ? Target::Positive : Target::Negative;
  r.counts = confusion_counts(flag_targets, targets);
  r.fixed = precision_recall_f1(r.counts);

  Vec s;
  std::vector<int> y;
  for (int t = 0; t < scores.length(); ++t) {
    if (scores.excluded[t] || targets[t] == Target::Excluded) continue;
    s.push_back(scores.score[t]);
    y.push_back(targets[t] == Target::Positive ? 1 : 0);
  }
  r.evaluated = static_cast<long>(s.size());
  r.excluded = scores.length() - r.evaluated;
  try {
    r.auc = roc_auc(s, y);
  } catch (const SingleClass&) {
    r.auc = std::numeric_limits<double>::quiet_NaN();
  }
  try {
    r.best = best_f1_sweep(s, y);
  } catch (const SingleClass&) {
    r.best = SweepResult{};
  }
  return r;
}

inline std::vector<Warning> early_warnings(const ScoreSeries& scores, const std::vector<int>& labels,
                                           int lookback, int lookahead) {
  if (labels.empty()) throw MissingLabels("no labels given");
  if (static_cast<int>(labels.size()) != scores.length())
    throw LengthMismatch("labels and scores differ in length");
  std::vector<Warning> out;
  for (int t = 0; t < static_cast<int>(labels.size()); ++t) {
    if (labels[t] != 1 || (t > 0 && labels[t - 1] == 1)) continue;  // onsets only
    const int lo = std::max(0, t - lookback - lookahead);
    for (int u = lo; u < t; ++u) {
      if (!scores.excluded[u] && scores.flags[u]) {
        out.push_back(Warning{t, u, t - u});
        break;
      }
    }
  }
  return out;
}

}  // namespace igcl
