#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "igcl/diffusion.hpp"
#include "oracles.hpp"

using namespace igcl;

TEST_CASE("noise schedule")
{
  SECTION("single step") {
    NoiseSchedule s = make_schedule(1, 0.1, 0.1);
    REQUIRE(s.beta == Vec{0.1});
  }
  SECTION("linear interpolation") {
    NoiseSchedule s = make_schedule(3, 0.0, 0.2);
    REQUIRE(s.beta.size() == 3);
    REQUIRE(s.beta[0] == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(s.beta[1] == Catch::Approx(0.1).margin(1e-15));
    REQUIRE(s.beta[2] == Catch::Approx(0.2).margin(1e-15));
  }
  SECTION("beta_max = 1 is out of range") {
    REQUIRE_THROWS_AS(make_schedule(5, 0.0, 1.0), BadRange);
  }
  SECTION("non-decreasing and inside [0,1)") {
    NoiseSchedule s = make_schedule(20, 1e-4, 0.1);
    for (size_t i = 0; i < s.beta.size(); ++i) {
      REQUIRE(s.beta[i] >= 0.0);
      REQUIRE(s.beta[i] < 1.0);
      if (i) REQUIRE(s.beta[i] >= s.beta[i - 1]);
    }
  }
}

TEST_CASE("denoiser forward")
{
  const int h = 4;
  Rng rng(1);
  DenoiserParams params = DenoiserParams::init(h, rng);
  Vec x(h + 1, 0.3), cond(h + 1, -0.2);

  SECTION("zero parameters give mu = 0 and sigma = softplus(0) + 1e-6") {
    DenoiserParams zero = params;
    for (auto& [name, p] : zero.named_params()) p->v.zero();
    auto [mu, sigma] = denoiser_forward(zero, x, 1, 3, cond);
    for (double m : mu) REQUIRE(m == 0.0);
    for (double s : sigma)
      REQUIRE(s == Catch::Approx(std::log(2.0) + 1e-6).epsilon(1e-12));
  }

  SECTION("deterministic") {
    auto a = denoiser_forward(params, x, 2, 3, cond);
    auto b = denoiser_forward(params, x, 2, 3, cond);
    REQUIRE(a.first == b.first);
    REQUIRE(a.second == b.second);
  }

  SECTION("short conditioning window is a shape error") {
    Vec bad(h);
    REQUIRE_THROWS_AS(denoiser_forward(params, x, 1, 3, bad), ShapeMismatch);
  }

  SECTION("sigma strictly positive for random params") {
    auto [mu, sigma] = denoiser_forward(params, x, 3, 3, cond);
    for (double s : sigma) REQUIRE(s > 0.0);
  }
}

TEST_CASE("reverse sampling")
{
  SECTION("single-step hand value") {
    Vec x{1.0, 1.0, 1.0};
    Vec head{0.5, 0.5, 0.5};
    Vec out = reverse_step(x, 0.36, head);
    for (double v : out) REQUIRE(v == Catch::Approx(0.875).margin(1e-12));
  }

  SECTION("beta = 0 everywhere returns the initial draw exactly") {
    const int h = 4;
    Rng rng(2);
    DenoiserParams params = DenoiserParams::init(h, rng);
    NoiseSchedule sched = make_schedule(5, 0.0, 0.0);
    Vec cond(h + 1, 0.1);
    Rng noise(77);
    SampleResult res = reverse_sample_pattern(params, sched, cond, 0, noise);
    REQUIRE(res.pattern.values == res.states[0]);
  }

  SECTION("fixed seed gives identical patterns") {
    const int h = 6;
    Rng rng(3);
    DenoiserParams params = DenoiserParams::init(h, rng);
    NoiseSchedule sched = make_schedule(8, 1e-4, 0.1);
    Vec cond(h + 1, 0.0);
    Rng n1(5), n2(5);
    SampleResult a = reverse_sample_pattern(params, sched, cond, 1, n1);
    SampleResult b = reverse_sample_pattern(params, sched, cond, 1, n2);
    REQUIRE(a.pattern.values == b.pattern.values);
  }

  SECTION("the step is affine in the state with slope 1/sqrt(1-beta)") {
    const double beta = 0.2;
    Vec head{0.3, -0.4};
    Vec x1{1.0, 2.0}, x2{1.5, 2.5};
    Vec y1 = reverse_step(x1, beta, head);
    Vec y2 = reverse_step(x2, beta, head);
    const double slope = 1.0 / std::sqrt(1.0 - beta);
    for (int i = 0; i < 2; ++i)
      REQUIRE((y2[i] - y1[i]) / (x2[i] - x1[i]) == Catch::Approx(slope).epsilon(1e-12));
  }
}

TEST_CASE("variance regularization")
{
  SECTION("sigma = 1 is the exact minimum") {
    std::vector<Vec> trace{Vec(5, 1.0), Vec(5, 1.0)};
    REQUIRE(variance_regularization(trace) == 0.0);
  }

  SECTION("closed-form values") {
    std::vector<Vec> t1{Vec{std::sqrt(2.0)}};
    REQUIRE(variance_regularization(t1) ==
            Catch::Approx(0.5 * (-std::log(2.0) + 1.0)).epsilon(1e-12));
    std::vector<Vec> t2{Vec{std::sqrt(0.5)}};
    REQUIRE(variance_regularization(t2) ==
            Catch::Approx(0.5 * (std::log(2.0) - 0.5)).epsilon(1e-12));
  }

  SECTION("nonpositive sigma is rejected") {
    std::vector<Vec> trace{Vec{0.5, 0.0}};
    REQUIRE_THROWS_AS(variance_regularization(trace), NonPositiveSigma);
  }

  SECTION("nonnegative over random traces, zero only at one") {
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Vec> trace(1 + rng.uniform_int(0, 3));
      bool all_one = true;
      for (Vec& v : trace) {
        v.resize(1 + rng.uniform_int(0, 4));
        for (double& x : v) {
          x = rng.uniform(0.1, 10.0);
          if (x != 1.0) all_one = false;
        }
      }
      double lr = variance_regularization(trace);
      REQUIRE(lr >= 0.0);
      if (!all_one) REQUIRE(lr > 0.0);
    }
  }

  SECTION("analytic gradient matches central differences") {
    Rng rng(4);
    std::vector<Vec> trace{Vec(3), Vec(3)};
    for (Vec& v : trace)
      for (double& x : v) x = rng.uniform(0.3, 3.0);
    std::vector<Vec> grad;
    variance_regularization_backward(trace, 1.0, grad);
    const double step = 1e-6;
    for (size_t s = 0; s < trace.size(); ++s)
      for (size_t i = 0; i < trace[s].size(); ++i) {
        auto plus = trace, minus = trace;
        plus[s][i] += step;
        minus[s][i] -= step;
        double fd = (variance_regularization(plus) - variance_regularization(minus)) / (2 * step);
        REQUIRE(grad[s][i] == Catch::Approx(fd).epsilon(1e-6));
      }
  }
}

TEST_CASE("pattern injection")
{
  SeriesFrame f;
  f.values = Mat(3, 20);
  Rng rng(6);
  for (double& x : f.values.a) x = rng.normal();
  NormalizedSegment seg = instance_normalize(make_segment(f, 19, 4, 12));

  SECTION("zero pattern is the identity") {
    PrecursorPattern p{1, Vec(5, 0.0)};
    NormalizedSegment out = inject_pattern(seg, p);
    REQUIRE(out.data.a == seg.data.a);
  }

  SECTION("other variables are bit-identical") {
    PrecursorPattern p{0, Vec{1, 2, 3, 4, 5}};
    NormalizedSegment out = inject_pattern(seg, p);
    for (int v = 1; v < 3; ++v)
      for (int c = 0; c < seg.length(); ++c) REQUIRE(out.data(v, c) == seg.data(v, c));
    // and only the last window of variable 0 moved
    for (int c = 0; c < seg.length() - 5; ++c) REQUIRE(out.data(0, c) == seg.data(0, c));
  }

  SECTION("additive inverse restores the segment") {
    PrecursorPattern p{2, Vec{0.5, -0.25, 1.5, 2.0, -3.0}};
    PrecursorPattern q = p;
    for (double& x : q.values) x = -x;
    NormalizedSegment out = inject_pattern(inject_pattern(seg, p), q);
    for (size_t i = 0; i < out.data.a.size(); ++i)
      REQUIRE(out.data.a[i] == Catch::Approx(seg.data.a[i]).margin(1e-12));
  }

  SECTION("wrong length is a shape error") {
    PrecursorPattern p{0, Vec(4, 1.0)};
    REQUIRE_THROWS_AS(inject_pattern(seg, p), ShapeMismatch);
  }
}

TEST_CASE("gradients flow through the sampler into the denoiser")
{
  // Tiny net: h=4, S=3, one hidden layer of 8. The scalar functional is a
  // fixed random linear readout of the pattern.
  const int h = 4;
  Rng rng(12);
  DenoiserParams params = DenoiserParams::init(h, {8}, rng);
  NoiseSchedule sched = make_schedule(3, 0.01, 0.2);
  Vec cond(h + 1);
  for (double& c : cond) c = rng.normal();
  Vec readout(h + 1);
  for (double& w : readout) w = rng.normal();
  const uint64_t noise_seed = 99;

  auto loss_fn = [&](DenoiserParams& p) {
    Rng noise(noise_seed);
    SampleResult res = reverse_sample_pattern(p, sched, cond, 0, noise);
    return dot(readout.data(), res.pattern.values.data(), h + 1);
  };

  // analytic
  for (auto& [name, p] : params.named_params()) p->zero_grad();
  {
    Rng noise(noise_seed);
    SampleResult res = reverse_sample_pattern(params, sched, cond, 0, noise);
    reverse_sample_backward(params, sched, res, readout, nullptr);
  }

  const double step = 1e-5;
  int checked = 0;
  for (auto& [name, p] : params.named_params()) {
    for (size_t i = 0; i < p->v.a.size(); ++i) {
      const double saved = p->v.a[i];
      p->v.a[i] = saved + step;
      const double up = loss_fn(params);
      p->v.a[i] = saved - step;
      const double down = loss_fn(params);
      p->v.a[i] = saved;
      const double fd = (up - down) / (2 * step);
      const double ga = p->g.a[i];
      const double scale = std::max({1.0, std::abs(fd), std::abs(ga)});
      REQUIRE(std::abs(ga - fd) / scale < 1e-4);
      ++checked;
    }
  }
  REQUIRE(checked > 100);
}
