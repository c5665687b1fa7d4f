#pragma once

// Contextual representation encoder. A pointwise embedding feeds parallel
// causal convolution stacks, one per kernel size, with exponentially growing
// dilation k^(l-1). The layer count per branch is the smallest L with
// k^L >= 2(h+1), so the receptive field covers a pair of successive
// look-back windows. Branch outputs are mean-pooled and every output column
// is normalized to unit Euclidean norm. The whole segment is encoded in one
// pass: every column's representation comes out of the same forward sweep,
// which is what keeps the cost at O(k(b+h)log h) instead of per-anchor
// re-encoding.
//
// Each non-plain layer applies a rectifier and a residual connection around
// the dilated convolution; `plain_tcn` drops both and reproduces the bare
// linear recursion.

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "igcl/errors.hpp"
#include "igcl/mat.hpp"
#include "igcl/rng.hpp"
#include "igcl/series.hpp"

namespace igcl {

struct EncoderConfig {
  int n_vars = 0;
  int aux_dim = 0;
  int dim = 0;       // representation width d
  int lookback = 0;  // h
  std::vector<int> kernels{2, 3};
  bool plain_tcn = false;
};

/// Smallest L >= 1 with k^L >= 2(h+1).
inline int layers_for_kernel(int kernel, int lookback) {
  if (kernel < 2) throw ConfigError("kernel size must be at least 2");
  const long need = 2L * (lookback + 1);
  int layers = 1;
  long span = kernel;
  while (span < need) {
    span *= kernel;
    ++layers;
  }
  return layers;
}

struct ConvLayer {
  Param weight;  // d x (k*d); tap i occupies columns [i*d, (i+1)*d)
  Param bias;    // 1 x d
  int kernel = 0;
  int dilation = 0;
};

struct EncoderParams {
  EncoderConfig cfg;
  Param embed_w;  // d x (N+F)
  Param embed_b;  // 1 x d
  std::vector<std::vector<ConvLayer>> branches;

  static EncoderParams init(const EncoderConfig& cfg, Rng& rng) {
    if (cfg.n_vars < 1 || cfg.dim < 1 || cfg.lookback < 1 || cfg.kernels.empty())
      throw ConfigError("encoder config needs n_vars, dim, lookback >= 1 and a kernel set");
    EncoderParams p;
    p.cfg = cfg;
    const int in = cfg.n_vars + cfg.aux_dim;
    p.embed_w = Param(cfg.dim, in);
    p.embed_b = Param(1, cfg.dim);
    auto uniform_fan_in = [&rng](Mat& w) {
      double a = std::sqrt(3.0 / w.cols);
      for (double& x : w.a) x = rng.uniform(-a, a);
    };
    uniform_fan_in(p.embed_w.v);
    for (int k : cfg.kernels) {
      const int n_layers = layers_for_kernel(k, cfg.lookback);
      std::vector<ConvLayer> stack;
      int dilation = 1;
      for (int l = 0; l < n_layers; ++l) {
        ConvLayer layer;
        layer.kernel = k;
        layer.dilation = dilation;
        layer.weight = Param(cfg.dim, k * cfg.dim);
        layer.bias = Param(1, cfg.dim);
        uniform_fan_in(layer.weight.v);
        stack.push_back(std::move(layer));
        dilation *= k;
      }
      p.branches.push_back(std::move(stack));
    }
    return p;
  }

  /// Widest span of past inputs influencing one output column: max_k k^L.
  int receptive_field() const {
    long best = 1;
    for (const auto& stack : branches) {
      long span = 1;
      for (const ConvLayer& l : stack) span *= l.kernel;
      best = std::max(best, span);
    }
    return static_cast<int>(best);
  }

  std::vector<std::pair<std::string, Param*>> named_params() {
    std::vector<std::pair<std::string, Param*>> out;
    out.emplace_back("embed/W", &embed_w);
    out.emplace_back("embed/b", &embed_b);
    for (size_t b = 0; b < branches.size(); ++b) {
      std::string prefix = "branch" + std::to_string(b) + "_k" +
                           std::to_string(branches[b].empty() ? 0 : branches[b][0].kernel);
      for (size_t l = 0; l < branches[b].size(); ++l) {
        out.emplace_back(prefix + "/l" + std::to_string(l) + "/W", &branches[b][l].weight);
        out.emplace_back(prefix + "/l" + std::to_string(l) + "/b", &branches[b][l].bias);
      }
    }
    return out;
  }
};

/// All contextual representations of one segment, one row per timestamp.
/// valid[p] marks positions whose own look-back window [p-h, p] lies inside
/// the segment.
struct RepresentationTrack {
  Mat z;  // length x d, unit rows
  std::vector<uint8_t> valid;
};

struct BranchCache {
  std::vector<Mat> acts;  // acts[0] = embedded input, acts[l] = layer l output
  std::vector<Mat> pre;   // pre-activation per layer
};

struct EncodeCache {
  Mat features;   // length x (N+F) concatenated inputs
  Mat embed_pre;  // length x d
  Mat embedded;   // length x d
  std::vector<BranchCache> branches;
  Mat pooled;            // length x d, pre-normalization
  Vec inv_norm;          // per row
  std::vector<uint8_t> clamped;  // rows whose norm hit the guard
};

/// Pointwise embedding: row t is rectifier(W_e * concat(x_t, a_t) + b_e).
inline Mat embed(const EncoderParams& params, const Mat& segment_data, const AuxAttributes& aux,
                 Mat* pre_out = nullptr, Mat* features_out = nullptr) {
  const EncoderConfig& cfg = params.cfg;
  const int len = segment_data.cols;
  if (segment_data.rows != cfg.n_vars)
    throw ShapeMismatch("segment has " + std::to_string(segment_data.rows) + " variables, encoder expects " +
                        std::to_string(cfg.n_vars));
  if (aux.dim() != cfg.aux_dim || (cfg.aux_dim > 0 && aux.data.cols != len))
    throw ShapeMismatch("auxiliary attributes have dim " + std::to_string(aux.dim()) +
                        ", encoder expects " + std::to_string(cfg.aux_dim));
  const int in = cfg.n_vars + cfg.aux_dim;
  Mat features(len, in);
  for (int t = 0; t < len; ++t) {
    double* f = features.row(t);
    for (int v = 0; v < cfg.n_vars; ++v) f[v] = segment_data(v, t);
    for (int a = 0; a < cfg.aux_dim; ++a) f[cfg.n_vars + a] = aux.data(a, t);
  }
  Mat pre(len, cfg.dim), out(len, cfg.dim);
  for (int t = 0; t < len; ++t) {
    const double* f = features.row(t);
    double* p = pre.row(t);
    double* o = out.row(t);
    for (int r = 0; r < cfg.dim; ++r) {
      double s = params.embed_b.v(0, r) + dot(params.embed_w.v.row(r), f, in);
      p[r] = s;
      o[r] = s > 0.0 ? s : 0.0;
    }
  }
  if (pre_out) *pre_out = std::move(pre);
  if (features_out) *features_out = std::move(features);
  return out;
}

namespace detail {

/// out(t) = bias + sum_tap W_tap * in(t - dilation*tap), zero-padded left.
inline void dilated_conv_forward(const ConvLayer& layer, const Mat& in, Mat& pre, bool plain) {
  const int len = in.rows, d = in.cols;
  for (int t = 0; t < len; ++t) {
    double* o = pre.row(t);
    if (plain) {
      for (int r = 0; r < d; ++r) o[r] = 0.0;
    } else {
      for (int r = 0; r < d; ++r) o[r] = layer.bias.v(0, r);
    }
    for (int tap = 0; tap < layer.kernel; ++tap) {
      const int src = t - layer.dilation * tap;
      if (src < 0) continue;
      const double* x = in.row(src);
      const int off = tap * d;
      for (int r = 0; r < d; ++r) o[r] += dot(layer.weight.v.row(r) + off, x, d);
    }
  }
}

}  // namespace detail

/// Applies one branch stack. Non-plain layers: rectifier plus residual around
/// the convolution; plain: the bare recursion (no bias, no rectifier, no
/// residual).
inline Mat tcn_branch_forward(const std::vector<ConvLayer>& layers, const Mat& embedded,
                              bool plain_tcn = false, BranchCache* cache = nullptr) {
  if (embedded.rows < 1) throw ShapeMismatch("empty input to branch");
  Mat cur = embedded;
  if (cache) {
    cache->acts.clear();
    cache->pre.clear();
    cache->acts.push_back(cur);
  }
  for (const ConvLayer& layer : layers) {
    Mat pre(cur.rows, cur.cols);
    detail::dilated_conv_forward(layer, cur, pre, plain_tcn);
    Mat out(cur.rows, cur.cols);
    if (plain_tcn) {
      out = pre;
    } else {
      for (int t = 0; t < cur.rows; ++t) {
        const double* p = pre.row(t);
        const double* x = cur.row(t);
        double* o = out.row(t);
        for (int r = 0; r < cur.cols; ++r) o[r] = (p[r] > 0.0 ? p[r] : 0.0) + x[r];
      }
    }
    if (cache) {
      cache->pre.push_back(std::move(pre));
      cache->acts.push_back(out);
    }
    cur = std::move(out);
  }
  return cur;
}

// Column normalization uses z = v / sqrt(|v|^2 + eps^2): within 1e-6 of unit
// norm for any column with |v| >= 1e-3, and smooth at v = 0 (an all-dead
// rectifier column yields the zero representation instead of a jump).
constexpr double kNormEps = 1e-6;

/// Embeds, runs every kernel branch, mean-pools, and unit-normalizes each
/// output column. One call yields the representations of every position of
/// the segment.
inline RepresentationTrack encode_track(const EncoderParams& params, const NormalizedSegment& segment,
                                        const AuxAttributes& aux, EncodeCache* cache = nullptr) {
  EncodeCache local;
  EncodeCache& c = cache ? *cache : local;
  c.embedded = embed(params, segment.data, aux, &c.embed_pre, &c.features);
  const int len = c.embedded.rows, d = c.embedded.cols;
  const int nb = static_cast<int>(params.branches.size());
  c.branches.assign(nb, BranchCache{});
  c.pooled = Mat(len, d);
  for (int b = 0; b < nb; ++b) {
    Mat out = tcn_branch_forward(params.branches[b], c.embedded, params.cfg.plain_tcn, &c.branches[b]);
    for (size_t i = 0; i < out.a.size(); ++i) c.pooled.a[i] += out.a[i];
  }
  const double inv_nb = 1.0 / nb;
  for (double& x : c.pooled.a) x *= inv_nb;

  RepresentationTrack track;
  track.z = Mat(len, d);
  c.inv_norm.resize(len);
  for (int t = 0; t < len; ++t) {
    const double* v = c.pooled.row(t);
    const double n2 = dot(v, v, d);
    c.inv_norm[t] = 1.0 / std::sqrt(n2 + kNormEps * kNormEps);
    double* z = track.z.row(t);
    for (int r = 0; r < d; ++r) z[r] = v[r] * c.inv_norm[t];
  }
  track.valid.assign(len, 0);
  for (int t = params.cfg.lookback; t < len; ++t) track.valid[t] = 1;
  return track;
}

/// Backward pass for encode_track. d_track is the loss gradient on the
/// normalized representations; parameter gradients are accumulated in place,
/// and d_segment (if given) receives the gradient on the segment values.
inline void encode_backward(EncoderParams& params, const EncodeCache& cache,
                            const RepresentationTrack& track, const Mat& d_track,
                            Mat* d_segment = nullptr) {
  const int len = cache.pooled.rows, d = cache.pooled.cols;
  if (d_track.rows != len || d_track.cols != d) throw ShapeMismatch("track gradient shape");
  const int nb = static_cast<int>(params.branches.size());

  // Unit-norm backward: z = v / ||v||, dv = (dz - z (z . dz)) / ||v||.
  // Rows that hit the guard treat the denominator as a constant.
  Mat d_pooled(len, d);
  for (int t = 0; t < len; ++t) {
    const double* dz = d_track.row(t);
    const double* z = track.z.row(t);
    double* dv = d_pooled.row(t);
    const double inv = cache.inv_norm[t];
    if (cache.clamped[t]) {
      for (int r = 0; r < d; ++r) dv[r] = dz[r] * inv;
    } else {
      const double zdz = dot(z, dz, d);
      for (int r = 0; r < d; ++r) dv[r] = (dz[r] - z[r] * zdz) * inv;
    }
  }

  Mat d_embedded(len, d);
  const double inv_nb = 1.0 / nb;
  const bool plain = params.cfg.plain_tcn;
  for (int b = 0; b < nb; ++b) {
    const BranchCache& bc = cache.branches[b];
    std::vector<ConvLayer>& layers = params.branches[b];
    Mat d_out(len, d);
    for (size_t i = 0; i < d_out.a.size(); ++i) d_out.a[i] = d_pooled.a[i] * inv_nb;
    for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
      ConvLayer& layer = layers[l];
      const Mat& in = bc.acts[l];
      const Mat& pre = bc.pre[l];
      Mat d_in(len, d);
      for (int t = 0; t < len; ++t) {
        const double* dy = d_out.row(t);
        const double* p = pre.row(t);
        Vec d_pre_t(d);
        double* di_res = d_in.row(t);
        if (plain) {
          for (int r = 0; r < d; ++r) d_pre_t[r] = dy[r];
        } else {
          for (int r = 0; r < d; ++r) {
            d_pre_t[r] = p[r] > 0.0 ? dy[r] : 0.0;
            di_res[r] += dy[r];  // residual path
          }
        }
        for (int tap = 0; tap < layer.kernel; ++tap) {
          const int src = t - layer.dilation * tap;
          if (src < 0) continue;
          const double* x = in.row(src);
          double* dx = d_in.row(src);
          const int off = tap * d;
          for (int r = 0; r < d; ++r) {
            const double g = d_pre_t[r];
            if (g == 0.0) continue;
            axpy(g, x, layer.weight.g.row(r) + off, d);
            axpy(g, layer.weight.v.row(r) + off, dx, d);
          }
        }
        if (!plain)
          for (int r = 0; r < d; ++r) layer.bias.g(0, r) += d_pre_t[r];
      }
      d_out = std::move(d_in);
    }
    for (size_t i = 0; i < d_embedded.a.size(); ++i) d_embedded.a[i] += d_out.a[i];
  }

  // Embedding backward.
  const int in_dim = params.embed_w.v.cols;
  const int n_vars = params.cfg.n_vars;
  if (d_segment) *d_segment = Mat(n_vars, len);
  for (int t = 0; t < len; ++t) {
    const double* de = d_embedded.row(t);
    const double* p = cache.embed_pre.row(t);
    const double* f = cache.features.row(t);
    Vec d_f(in_dim, 0.0);
    for (int r = 0; r < d; ++r) {
      const double g = p[r] > 0.0 ? de[r] : 0.0;
      if (g == 0.0) continue;
      axpy(g, f, params.embed_w.g.row(r), in_dim);
      params.embed_b.g(0, r) += g;
      axpy(g, params.embed_w.v.row(r), d_f.data(), in_dim);
    }
    if (d_segment)
      for (int v = 0; v < n_vars; ++v) (*d_segment)(v, t) = d_f[v];
  }
}

/// Re-encodes only the last window of a segment whose final h+1 columns were
/// replaced by `override_cols` (N x (h+1)), reusing the cached activations of
/// the unmodified encode for everything earlier. Causality makes this exact:
/// activations at positions before the window are untouched by the override.
/// Returns the normalized representations of the last h+1 positions.
inline Mat encode_window_override(const EncoderParams& params, const EncodeCache& clean,
                                  const Mat& override_cols, const AuxAttributes& aux) {
  const EncoderConfig& cfg = params.cfg;
  const int len = clean.embedded.rows, d = cfg.dim;
  const int w = cfg.lookback + 1;
  if (override_cols.rows != cfg.n_vars || override_cols.cols != w)
    throw ShapeMismatch("override window shape");
  if (len < w) throw InsufficientHistory("segment shorter than one window");
  const int start = len - w;
  const int in_dim = cfg.n_vars + cfg.aux_dim;

  Mat cur(w, d);  // patched activations for the last w positions
  for (int i = 0; i < w; ++i) {
    Vec f(in_dim);
    for (int v = 0; v < cfg.n_vars; ++v) f[v] = override_cols(v, i);
    for (int a = 0; a < cfg.aux_dim; ++a) f[cfg.n_vars + a] = aux.data(a, start + i);
    double* o = cur.row(i);
    for (int r = 0; r < d; ++r) {
      double s = params.embed_b.v(0, r) + dot(params.embed_w.v.row(r), f.data(), in_dim);
      o[r] = s > 0.0 ? s : 0.0;
    }
  }

  Mat pooled(w, d);
  const bool plain = cfg.plain_tcn;
  for (size_t b = 0; b < params.branches.size(); ++b) {
    Mat x = cur;
    for (size_t l = 0; l < params.branches[b].size(); ++l) {
      const ConvLayer& layer = params.branches[b][l];
      const Mat& clean_in = clean.branches[b].acts[l];
      Mat pre(w, d);
      for (int i = 0; i < w; ++i) {
        const int t = start + i;
        double* o = pre.row(i);
        if (plain) {
          for (int r = 0; r < d; ++r) o[r] = 0.0;
        } else {
          for (int r = 0; r < d; ++r) o[r] = layer.bias.v(0, r);
        }
        for (int tap = 0; tap < layer.kernel; ++tap) {
          const int src = t - layer.dilation * tap;
          if (src < 0) continue;
          const double* xin = src < start ? clean_in.row(src) : x.row(src - start);
          const int off = tap * d;
          for (int r = 0; r < d; ++r) o[r] += dot(layer.weight.v.row(r) + off, xin, d);
        }
      }
      if (plain) {
        x = std::move(pre);
      } else {
        Mat out(w, d);
        for (int i = 0; i < w; ++i) {
          const double* p = pre.row(i);
          const double* xi = x.row(i);
          double* o = out.row(i);
          for (int r = 0; r < d; ++r) o[r] = (p[r] > 0.0 ? p[r] : 0.0) + xi[r];
        }
        x = std::move(out);
      }
    }
    for (size_t i = 0; i < x.a.size(); ++i) pooled.a[i] += x.a[i];
  }
  const double inv_nb = 1.0 / static_cast<double>(params.branches.size());
  Mat z(w, d);
  for (int i = 0; i < w; ++i) {
    double* row = pooled.row(i);
    for (int r = 0; r < d; ++r) row[r] *= inv_nb;
    double n = norm2(row, d);
    double inv = 1.0 / (n < kNormGuard ? kNormGuard : n);
    double* zr = z.row(i);
    for (int r = 0; r < d; ++r) zr[r] = row[r] * inv;
  }
  return z;
}

}  // namespace igcl
