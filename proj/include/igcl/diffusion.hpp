#pragma once

// Anomaly precursor pattern generation. A conditional MLP denoiser predicts
// per-step mean and scale heads; the sampler reverses Gaussian noise through
// the step
//
//   x^{s-1} = (x^s - sqrt(beta_s) * (sigma_s * eps + mu_s)) / sqrt(1 - beta_s)
//
// with fresh eps per step. The reparameterized head keeps the whole chain
// differentiable with respect to the denoiser parameters, and the per-step
// sigma trace feeds the variance regularization loss
//
//   L_r = sum_s mean( (-log sigma^2 + sigma^2 - 1) / 2 ).

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "igcl/errors.hpp"
#include "igcl/mat.hpp"
#include "igcl/rng.hpp"
#include "igcl/series.hpp"

namespace igcl {

struct NoiseSchedule {
  std::vector<double> beta;  // beta[s-1] is the step-s coefficient
  int steps() const { return static_cast<int>(beta.size()); }
};

/// Linear schedule from beta_min to beta_max over s_max steps.
inline NoiseSchedule make_schedule(int s_max, double beta_min, double beta_max) {
  if (s_max < 1) throw BadRange("step count must be at least 1");
  if (!(0.0 <= beta_min && beta_min <= beta_max && beta_max < 1.0))
    throw BadRange("need 0 <= beta_min <= beta_max < 1");
  NoiseSchedule sched;
  sched.beta.resize(s_max);
  for (int s = 0; s < s_max; ++s)
    sched.beta[s] =
        s_max == 1 ? beta_min : beta_min + (beta_max - beta_min) * s / double(s_max - 1);
  return sched;
}

/// A generated perturbation for one variable over one look-back window.
struct PrecursorPattern {
  int variable = 0;
  Vec values;  // length h+1

  int window() const { return static_cast<int>(values.size()); }
};

constexpr double kSigmaFloor = 1e-6;

inline double softplus(double x) { return x > 35.0 ? x : std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

/// MLP denoiser parameters. Input is concat(x_s, s/S, conditioning window);
/// two output heads of window length each produce mu and the raw scale, with
/// sigma = softplus(raw) + 1e-6 so the scale stays strictly positive.
struct DenoiserParams {
  int window = 0;  // h+1
  std::vector<Param> weights;
  std::vector<Param> biases;
  Param head_mu_w, head_mu_b;
  Param head_sigma_w, head_sigma_b;

  int input_dim() const { return 2 * window + 1; }

  static DenoiserParams init(int lookback, const std::vector<int>& hidden, Rng& rng) {
    DenoiserParams p;
    p.window = lookback + 1;
    int in = p.input_dim();
    auto uniform_fan_in = [&rng](Param& w) {
      double a = std::sqrt(3.0 / w.v.cols);
      for (double& x : w.v.a) x = rng.uniform(-a, a);
    };
    for (int width : hidden) {
      p.weights.emplace_back(width, in);
      p.biases.emplace_back(1, width);
      uniform_fan_in(p.weights.back());
      in = width;
    }
    p.head_mu_w = Param(p.window, in);
    p.head_mu_b = Param(1, p.window);
    p.head_sigma_w = Param(p.window, in);
    p.head_sigma_b = Param(1, p.window);
    uniform_fan_in(p.head_mu_w);
    uniform_fan_in(p.head_sigma_w);
    return p;
  }

  static DenoiserParams init(int lookback, Rng& rng) {
    int width = 4 * (lookback + 1);
    return init(lookback, {width, width}, rng);
  }

  std::vector<std::pair<std::string, Param*>> named_params() {
    std::vector<std::pair<std::string, Param*>> out;
    for (size_t l = 0; l < weights.size(); ++l) {
      out.emplace_back("denoiser/l" + std::to_string(l) + "/W", &weights[l]);
      out.emplace_back("denoiser/l" + std::to_string(l) + "/b", &biases[l]);
    }
    out.emplace_back("denoiser/mu/W", &head_mu_w);
    out.emplace_back("denoiser/mu/b", &head_mu_b);
    out.emplace_back("denoiser/sigma/W", &head_sigma_w);
    out.emplace_back("denoiser/sigma/b", &head_sigma_b);
    return out;
  }
};

struct DenoiserCache {
  Vec input;
  std::vector<Vec> pre, act;  // per hidden layer
  Vec sigma_raw, sigma, mu;
};

inline std::pair<Vec, Vec> denoiser_forward(const DenoiserParams& params, const Vec& x_s, int s,
                                            int s_max, const Vec& cond,
                                            DenoiserCache* cache = nullptr) {
  const int w = params.window;
  if (static_cast<int>(x_s.size()) != w)
    throw ShapeMismatch("pattern state has length " + std::to_string(x_s.size()) + ", expected " +
                        std::to_string(w));
  if (static_cast<int>(cond.size()) != w)
    throw ShapeMismatch("conditioning window has length " + std::to_string(cond.size()) +
                        ", expected " + std::to_string(w));
  if (s < 1 || s > s_max) throw OutOfRange("step index " + std::to_string(s));

  Vec a(params.input_dim());
  for (int i = 0; i < w; ++i) a[i] = x_s[i];
  a[w] = static_cast<double>(s) / static_cast<double>(s_max);
  for (int i = 0; i < w; ++i) a[w + 1 + i] = cond[i];
  if (cache) {
    cache->input = a;
    cache->pre.clear();
    cache->act.clear();
  }

  for (size_t l = 0; l < params.weights.size(); ++l) {
    const Mat& W = params.weights[l].v;
    const Mat& b = params.biases[l].v;
    Vec pre(W.rows);
    for (int r = 0; r < W.rows; ++r) pre[r] = b(0, r) + dot(W.row(r), a.data(), W.cols);
    Vec act(W.rows);
    for (int r = 0; r < W.rows; ++r) act[r] = pre[r] > 0.0 ? pre[r] : 0.0;
    if (cache) {
      cache->pre.push_back(pre);
      cache->act.push_back(act);
    }
    a = std::move(act);
  }

  Vec mu(w), raw(w), sigma(w);
  for (int r = 0; r < w; ++r) {
    mu[r] = params.head_mu_b.v(0, r) + dot(params.head_mu_w.v.row(r), a.data(), params.head_mu_w.v.cols);
    raw[r] = params.head_sigma_b.v(0, r) +
             dot(params.head_sigma_w.v.row(r), a.data(), params.head_sigma_w.v.cols);
    sigma[r] = softplus(raw[r]) + kSigmaFloor;
  }
  if (cache) {
    cache->mu = mu;
    cache->sigma_raw = raw;
    cache->sigma = sigma;
  }
  return {std::move(mu), std::move(sigma)};
}

/// Accumulates parameter gradients for one denoiser evaluation and optionally
/// returns the gradient with respect to the x_s part of the input.
inline void denoiser_backward(DenoiserParams& params, const DenoiserCache& cache, const Vec& d_mu,
                              const Vec& d_sigma, Vec* d_xs) {
  const int w = params.window;
  Vec d_raw(w);
  for (int r = 0; r < w; ++r) d_raw[r] = d_sigma[r] * sigmoid(cache.sigma_raw[r]);

  const Vec& top = cache.act.empty() ? cache.input : cache.act.back();
  const int top_n = static_cast<int>(top.size());
  Vec d_a(top_n, 0.0);
  for (int r = 0; r < w; ++r) {
    axpy(d_mu[r], top.data(), params.head_mu_w.g.row(r), top_n);
    params.head_mu_b.g(0, r) += d_mu[r];
    axpy(d_raw[r], top.data(), params.head_sigma_w.g.row(r), top_n);
    params.head_sigma_b.g(0, r) += d_raw[r];
    axpy(d_mu[r], params.head_mu_w.v.row(r), d_a.data(), top_n);
    axpy(d_raw[r], params.head_sigma_w.v.row(r), d_a.data(), top_n);
  }

  for (int l = static_cast<int>(params.weights.size()) - 1; l >= 0; --l) {
    const Mat& W = params.weights[l].v;
    const Vec& below = l == 0 ? cache.input : cache.act[l - 1];
    Vec d_pre(W.rows);
    for (int r = 0; r < W.rows; ++r) d_pre[r] = cache.pre[l][r] > 0.0 ? d_a[r] : 0.0;
    Vec d_below(W.cols, 0.0);
    for (int r = 0; r < W.rows; ++r) {
      axpy(d_pre[r], below.data(), params.weights[l].g.row(r), W.cols);
      params.biases[l].g(0, r) += d_pre[r];
      axpy(d_pre[r], W.row(r), d_below.data(), W.cols);
    }
    d_a = std::move(d_below);
  }
  if (d_xs) {
    d_xs->assign(w, 0.0);
    for (int i = 0; i < w; ++i) (*d_xs)[i] = d_a[i];
  }
}

/// One reverse denoising step. Affine in x_s with slope 1/sqrt(1-beta).
inline Vec reverse_step(const Vec& x_s, double beta, const Vec& head) {
  if (!(0.0 <= beta && beta < 1.0)) throw BadRange("beta must lie in [0, 1)");
  if (x_s.size() != head.size()) throw ShapeMismatch("state and head lengths differ");
  const double c1 = 1.0 / std::sqrt(1.0 - beta);
  const double rb = std::sqrt(beta);
  Vec out(x_s.size());
  for (size_t i = 0; i < x_s.size(); ++i) out[i] = c1 * (x_s[i] - rb * head[i]);
  return out;
}

/// Everything produced by one sampling run, including the intermediates the
/// backward pass needs. states[0] is the initial Gaussian draw x^S and
/// states[S] is the pattern x^0; sigma_trace[s-1], noise[s-1] and caches[s-1]
/// belong to step s.
struct SampleResult {
  PrecursorPattern pattern;
  std::vector<Vec> sigma_trace;
  std::vector<Vec> states;
  std::vector<Vec> noise;
  std::vector<DenoiserCache> caches;
};

inline SampleResult reverse_sample_pattern(const DenoiserParams& params,
                                           const NoiseSchedule& schedule, const Vec& cond,
                                           int variable, Rng& rng) {
  const int w = params.window;
  if (static_cast<int>(cond.size()) != w)
    throw ShapeMismatch("conditioning window has length " + std::to_string(cond.size()) +
                        ", expected " + std::to_string(w));
  const int s_max = schedule.steps();
  SampleResult res;
  res.sigma_trace.resize(s_max);
  res.noise.resize(s_max);
  res.caches.resize(s_max);
  res.states.reserve(s_max + 1);

  Vec x(w);
  for (int i = 0; i < w; ++i) x[i] = rng.normal();
  res.states.push_back(x);

  for (int s = s_max; s >= 1; --s) {
    auto [mu, sigma] = denoiser_forward(params, x, s, s_max, cond, &res.caches[s - 1]);
    Vec eps(w);
    for (int i = 0; i < w; ++i) eps[i] = rng.normal();
    Vec head(w);
    for (int i = 0; i < w; ++i) head[i] = sigma[i] * eps[i] + mu[i];
    x = reverse_step(x, schedule.beta[s - 1], head);
    res.sigma_trace[s - 1] = std::move(sigma);
    res.noise[s - 1] = std::move(eps);
    res.states.push_back(x);
  }
  res.pattern.variable = variable;
  res.pattern.values = x;
  return res;
}

/// Backpropagates a gradient on the sampled pattern (and, optionally, extra
/// per-step gradients on sigma from the regularization loss) into the
/// denoiser parameter gradient slots. The per-step noise draws are constants.
inline void reverse_sample_backward(DenoiserParams& params, const NoiseSchedule& schedule,
                                    const SampleResult& sample, const Vec& d_pattern,
                                    const std::vector<Vec>* d_sigma_extra = nullptr) {
  const int w = params.window;
  if (static_cast<int>(d_pattern.size()) != w)
    throw ShapeMismatch("pattern gradient length mismatch");
  Vec g = d_pattern;  // gradient w.r.t. x^{s-1}, starting at x^0
  const int s_max = schedule.steps();
  for (int s = 1; s <= s_max; ++s) {
    const double beta = schedule.beta[s - 1];
    const double c1 = 1.0 / std::sqrt(1.0 - beta);
    const double c2 = std::sqrt(beta) * c1;
    Vec d_mu(w), d_sigma(w);
    for (int i = 0; i < w; ++i) {
      d_mu[i] = -c2 * g[i];
      d_sigma[i] = -c2 * g[i] * sample.noise[s - 1][i];
    }
    if (d_sigma_extra)
      for (int i = 0; i < w; ++i) d_sigma[i] += (*d_sigma_extra)[s - 1][i];
    Vec d_x_in;
    denoiser_backward(params, sample.caches[s - 1], d_mu, d_sigma, &d_x_in);
    for (int i = 0; i < w; ++i) g[i] = c1 * g[i] + d_x_in[i];
  }
}

/// Variance regularization: sum over steps of the entry-mean of
/// (-log sigma^2 + sigma^2 - 1) / 2. Nonnegative, zero iff sigma is 1
/// everywhere.
inline double variance_regularization(const std::vector<Vec>& sigma_trace) {
  double total = 0.0;
  for (const Vec& sigma : sigma_trace) {
    if (sigma.empty()) throw ShapeMismatch("empty sigma vector in trace");
    double acc = 0.0;
    for (double s : sigma) {
      if (!(s > 0.0)) throw NonPositiveSigma("sigma = " + std::to_string(s));
      double s2 = s * s;
      acc += 0.5 * (-std::log(s2) + s2 - 1.0);
    }
    total += acc / static_cast<double>(sigma.size());
  }
  return total;
}

/// Accumulates scale * dL_r/dsigma into d_out. Per entry the derivative is
/// (sigma - 1/sigma) / len.
inline void variance_regularization_backward(const std::vector<Vec>& sigma_trace, double scale,
                                             std::vector<Vec>& d_out) {
  if (d_out.size() != sigma_trace.size()) {
    d_out.resize(sigma_trace.size());
    for (size_t s = 0; s < sigma_trace.size(); ++s) d_out[s].assign(sigma_trace[s].size(), 0.0);
  }
  for (size_t s = 0; s < sigma_trace.size(); ++s) {
    const double inv_len = 1.0 / static_cast<double>(sigma_trace[s].size());
    for (size_t i = 0; i < sigma_trace[s].size(); ++i) {
      double sg = sigma_trace[s][i];
      d_out[s][i] += scale * (sg - 1.0 / sg) * inv_len;
    }
  }
}

/// Adds the pattern to the last look-back window of the segment, on the
/// pattern's variable only. Everything else is copied unchanged.
inline NormalizedSegment inject_pattern(const NormalizedSegment& segment,
                                        const PrecursorPattern& pattern) {
  const int w = segment.lookback + 1;
  if (pattern.window() != w)
    throw ShapeMismatch("pattern length " + std::to_string(pattern.window()) + ", window is " +
                        std::to_string(w));
  if (pattern.variable < 0 || pattern.variable >= segment.vars())
    throw ShapeMismatch("pattern variable " + std::to_string(pattern.variable) + " out of range");
  NormalizedSegment out = segment;
  const int start = segment.length() - w;
  for (int i = 0; i < w; ++i) out.data(pattern.variable, start + i) += pattern.values[i];
  return out;
}

}  // namespace igcl
