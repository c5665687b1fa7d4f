#pragma once

// Joint end-to-end optimization of denoiser and encoder. One step: normalize
// the segment, sample a precursor pattern for one random variable, build the
// K+1 negative segments, encode everything, take one adaptive-moment gradient
// step on the total loss, and only then maintain the bank (inject, rescore,
// insert, evict least-important). Labels are never consulted.

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "igcl/checkpoint.hpp"
#include "igcl/contrastive.hpp"
#include "igcl/diffusion.hpp"
#include "igcl/encoder.hpp"
#include "igcl/memory_bank.hpp"
#include "igcl/model.hpp"
#include "igcl/series.hpp"

namespace igcl {

/// Adaptive moment estimation with global-norm gradient clipping.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double clip_norm = 5.0;
  long t = 0;
  std::vector<Vec> m, v;

  explicit Adam(double learning_rate = 1e-3) : lr(learning_rate) {}

  void step(const std::vector<std::pair<std::string, Param*>>& params) {
    if (m.size() != params.size()) {
      m.clear();
      v.clear();
      for (const auto& [name, p] : params) {
        m.emplace_back(p->v.a.size(), 0.0);
        v.emplace_back(p->v.a.size(), 0.0);
      }
    }
    double sq = 0.0;
    for (const auto& [name, p] : params)
      for (double g : p->g.a) sq += g * g;
    const double gnorm = std::sqrt(sq);
    const double scale = gnorm > clip_norm ? clip_norm / gnorm : 1.0;
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < params.size(); ++i) {
      Param* p = params[i].second;
      for (size_t j = 0; j < p->v.a.size(); ++j) {
        const double g = p->g.a[j] * scale;
        m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g;
        v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g * g;
        p->v.a[j] -= lr * (m[i][j] / bc1) / (std::sqrt(v[i][j] / bc2) + eps);
      }
    }
  }
};

struct StepMetrics {
  double contrastive = 0.0;
  double regularization = 0.0;
  double total = 0.0;
  double evicted_importance = std::numeric_limits<double>::quiet_NaN();
  int bank_fill = 0;
};

namespace detail {

/// Everything one forward pass produces that later stages need.
struct StepOut {
  NormalizedSegment norm;
  AuxAttributes aux;
  SampleResult sample;
  RepresentationTrack clean_track;
  std::vector<RepresentationTrack> neg_tracks;
  double contrastive = 0.0, regularization = 0.0, total = 0.0;
  int anchor_begin = 0, anchor_end = 0;
};

/// Forward pass for one segment with the variable choice and noise draws
/// pinned by noise_seed, so the loss is a deterministic function of the
/// parameters (which is what a finite-difference check needs). When
/// with_grads is set, parameter gradients are accumulated in place.
inline double step_loss(ModelState& state, const WindowSegment& segment, int variable,
                        uint64_t noise_seed, bool with_grads, StepOut* out_ptr = nullptr) {
  const TrainConfig& cfg = state.config;
  StepOut local;
  StepOut& out = out_ptr ? *out_ptr : local;

  out.norm = instance_normalize(segment, cfg.epsilon);
  if (state.encoder.cfg.aux_dim > 0) {
    if (segment.timestamps.empty())
      throw ShapeMismatch("model was built with time attributes but the segment has no timestamps");
    out.aux = encode_time_attributes(segment.timestamps);
  }

  const int w = cfg.lookback + 1;
  const int len = out.norm.length();
  Vec cond(w);
  for (int i = 0; i < w; ++i) cond[i] = out.norm.data(variable, len - w + i);
  Rng noise_rng(noise_seed);
  out.sample = reverse_sample_pattern(state.denoiser, state.schedule, cond, variable, noise_rng);

  std::vector<NormalizedSegment> neg_segments =
      negative_windows(state.bank, out.norm, out.sample.pattern);

  EncodeCache clean_cache;
  out.clean_track = encode_track(state.encoder, out.norm, out.aux, &clean_cache);
  const int m = static_cast<int>(neg_segments.size());
  std::vector<EncodeCache> neg_caches(m);
  out.neg_tracks.resize(m);
  for (int j = 0; j < m; ++j)
    out.neg_tracks[j] = encode_track(state.encoder, neg_segments[j], out.aux, &neg_caches[j]);

  out.anchor_begin = cfg.batch - 1;
  out.anchor_end = cfg.batch + cfg.lookback - 1;
  std::vector<const Mat*> neg_ptrs;
  for (int j = 0; j < m; ++j) neg_ptrs.push_back(&out.neg_tracks[j].z);

  Mat d_clean;
  std::vector<Mat> d_negs;
  out.contrastive = contrastive_loss(out.clean_track.z, neg_ptrs, out.anchor_begin, out.anchor_end,
                                     cfg.objective(), &out.clean_track.valid,
                                     with_grads ? &d_clean : nullptr,
                                     with_grads ? &d_negs : nullptr);
  out.regularization = variance_regularization(out.sample.sigma_trace);
  out.total = total_loss(out.contrastive, out.regularization, cfg.lambda);
  if (!std::isfinite(out.total))
    throw NonFiniteLoss("L_c=" + std::to_string(out.contrastive) +
                        " L_r=" + std::to_string(out.regularization) + " at anchor " +
                        std::to_string(segment.anchor_t));
  if (!with_grads) return out.total;

  encode_backward(state.encoder, clean_cache, out.clean_track, d_clean, nullptr);
  Mat d_segment;
  for (int j = 0; j < m; ++j)
    encode_backward(state.encoder, neg_caches[j], out.neg_tracks[j], d_negs[j],
                    j == 0 ? &d_segment : nullptr);

  // Only the current pattern's track (j = 0) reaches the denoiser; stored
  // bank patterns are constants this step.
  Vec d_pattern(w);
  for (int i = 0; i < w; ++i) d_pattern[i] = d_segment(variable, len - w + i);
  std::vector<Vec> d_sigma;
  variance_regularization_backward(out.sample.sigma_trace, cfg.lambda, d_sigma);
  reverse_sample_backward(state.denoiser, state.schedule, out.sample, d_pattern, &d_sigma);
  return out.total;
}

/// Bank maintenance for one step, after the optimizer ran: broadcast the new
/// pattern into stored entries, refresh importances from this step's
/// representations, then insert the candidate and evict the least important.
inline std::optional<double> maintain_bank(ModelState& state, const StepOut& out) {
  broadcast_inject(state.bank, out.sample.pattern);
  std::vector<const Mat*> entry_tracks;
  for (size_t j = 1; j < out.neg_tracks.size(); ++j) entry_tracks.push_back(&out.neg_tracks[j].z);
  update_importance(state.bank, out.clean_track.z, entry_tracks, out.anchor_begin, out.anchor_end,
                    state.config.similarity);
  const double cand = importance_score(out.clean_track.z, out.neg_tracks[0].z, out.anchor_begin,
                                       out.anchor_end, state.config.similarity);
  return insert_and_evict(state.bank,
                          candidate_entry(state.bank, out.norm, out.sample.pattern, cand));
}

}  // namespace detail

/// One optimizer step over one or more segments. Gradients are averaged over
/// the batch; bank maintenance then runs per segment in order.
inline StepMetrics train_step_batch(ModelState& state, Adam& adam,
                                    const std::vector<WindowSegment>& segments, Rng& rng) {
  if (segments.empty()) throw OutOfRange("no segments");
  state.zero_grads();
  std::vector<detail::StepOut> outs(segments.size());
  StepMetrics metrics;
  for (size_t i = 0; i < segments.size(); ++i) {
    const int variable = rng.uniform_int(0, state.encoder.cfg.n_vars - 1);
    const uint64_t noise_seed = rng.bits();
    detail::step_loss(state, segments[i], variable, noise_seed, true, &outs[i]);
    metrics.contrastive += outs[i].contrastive;
    metrics.regularization += outs[i].regularization;
    metrics.total += outs[i].total;
  }
  const double inv = 1.0 / static_cast<double>(segments.size());
  if (segments.size() > 1)
    for (auto& [name, p] : state.named_params())
      for (double& g : p->g.a) g *= inv;
  metrics.contrastive *= inv;
  metrics.regularization *= inv;
  metrics.total *= inv;

  adam.step(state.named_params());
  for (const auto& out : outs) {
    auto evicted = detail::maintain_bank(state, out);
    if (evicted) metrics.evicted_importance = *evicted;
  }
  metrics.bank_fill = state.bank.size();
  return metrics;
}

inline StepMetrics train_step(ModelState& state, Adam& adam, const WindowSegment& segment,
                              Rng& rng) {
  return train_step_batch(state, adam, {segment}, rng);
}

struct EpochMetrics {
  int epoch = 0;
  int epochs = 0;
  double mean_contrastive = 0.0;
  double mean_regularization = 0.0;
  int bank_fill = 0;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Trains on the (presumed normal) series. Labels, if present, are ignored.
/// Returns the final model state; save_checkpoint turns it into an archive.
inline ModelState train(const SeriesFrame& frame, const TrainConfig& config,
                        const EpochCallback& on_epoch = nullptr) {
  config.validate();
  const int first_anchor = config.batch + config.lookback - 1;
  if (frame.length() <= first_anchor)
    throw InsufficientHistory("series of length " + std::to_string(frame.length()) +
                              " cannot host one segment of b+h = " +
                              std::to_string(config.batch + config.lookback) + " points");
  const int aux_dim = frame.has_timestamps() ? 4 : 0;
  Rng rng(config.seed);
  ModelState state = init_model(config, frame.vars(), aux_dim, rng);
  Adam adam(config.learning_rate);

  const int steps = config.steps_per_epoch > 0
                        ? config.steps_per_epoch
                        : std::max(1, (frame.length() - first_anchor) / config.batch);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double sum_c = 0.0, sum_r = 0.0;
    for (int s = 0; s < steps; ++s) {
      std::vector<WindowSegment> segments;
      for (int a = 0; a < config.anchors_per_step; ++a) {
        const int t = rng.uniform_int(first_anchor, frame.length() - 1);
        segments.push_back(make_segment(frame, t, config.lookback, config.batch));
      }
      StepMetrics m = train_step_batch(state, adam, segments, rng);
      sum_c += m.contrastive;
      sum_r += m.regularization;
    }
    if (on_epoch) {
      EpochMetrics em;
      em.epoch = epoch;
      em.epochs = config.epochs;
      em.mean_contrastive = sum_c / steps;
      em.mean_regularization = sum_r / steps;
      em.bank_fill = state.bank.size();
      on_epoch(em);
    }
  }
  return state;
}

}  // namespace igcl
