#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "igcl/contrastive.hpp"
#include "igcl/rng.hpp"
#include "oracles.hpp"

using namespace igcl;

TEST_CASE("similarity")
{
  SECTION("cosine of a vector with itself is one") {
    Vec v{0.3, -1.2, 2.5};
    REQUIRE(similarity(v, v, SimilarityKind::Cosine) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("orthogonal vectors have zero cosine") {
    REQUIRE(similarity(Vec{1, 0}, Vec{0, 1}, SimilarityKind::Cosine) == 0.0);
  }
  SECTION("negative euclidean on a 3-4-5 triangle") {
    REQUIRE(similarity(Vec{1, 2}, Vec{4, 6}, SimilarityKind::NegEuclidean) ==
            Catch::Approx(-5.0).margin(1e-12));
  }
  SECTION("dimension mismatch") {
    REQUIRE_THROWS_AS(similarity(Vec{1, 2}, Vec{1, 2, 3}, SimilarityKind::Cosine), ShapeMismatch);
  }
  SECTION("cosine stays within [-1, 1] under the guard") {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      Vec a(4), b(4);
      for (double& x : a) x = rng.normal();
      for (double& x : b) x = rng.normal();
      double s = similarity(a, b, SimilarityKind::Cosine);
      REQUIRE(s >= -1.0 - 1e-12);
      REQUIRE(s <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("loss from similarities")
{
  SECTION("symmetric single positive and negative") {
    Mat pos(1, 1), neg(1, 1);
    pos(0, 0) = 0.4;
    neg(0, 0) = 0.4;
    REQUIRE(info_nce_from_sims(pos, neg, 1.0) == Catch::Approx(std::log(2.0)).margin(1e-15));
  }

  SECTION("well-separated at low temperature") {
    Mat pos(1, 1), neg(1, 1);
    pos(0, 0) = 1.0;
    neg(0, 0) = -1.0;
    const double expected = std::log1p(std::exp(-20.0));
    REQUIRE(info_nce_from_sims(pos, neg, 0.1) == Catch::Approx(expected).margin(1e-15));
  }

  SECTION("matches the direct-evaluation oracle on random instances") {
    Rng rng(7);
    for (int trial = 0; trial < 300; ++trial) {
      const int A = 1 + rng.uniform_int(0, 6);
      const int P = 1 + rng.uniform_int(0, 4);
      const int M = 1 + rng.uniform_int(0, 8);
      Mat pos(A, P), neg(A, M);
      for (double& x : pos.a) x = rng.uniform(-1.0, 1.0);
      for (double& x : neg.a) x = rng.uniform(-1.0, 1.0);
      const double tau = rng.uniform(0.05, 2.0);
      REQUIRE(info_nce_from_sims(pos, neg, tau) ==
              Catch::Approx(oracle::info_nce_direct(pos, neg, tau)).margin(1e-9));
    }
  }

  SECTION("always positive; raising a negative similarity raises the loss") {
    Rng rng(8);
    Mat pos(2, 3), neg(2, 4);
    for (double& x : pos.a) x = rng.uniform(-1.0, 1.0);
    for (double& x : neg.a) x = rng.uniform(-1.0, 1.0);
    const double base = info_nce_from_sims(pos, neg, 0.5);
    REQUIRE(base > 0.0);
    neg(1, 2) += 0.3;
    REQUIRE(info_nce_from_sims(pos, neg, 0.5) > base);
  }

  SECTION("invariant to shifting all of one anchor's similarities") {
    Mat pos(1, 2), neg(1, 3);
    pos(0, 0) = 0.2;
    pos(0, 1) = -0.5;
    neg(0, 0) = 0.9;
    neg(0, 1) = 0.0;
    neg(0, 2) = -0.7;
    const double base = info_nce_from_sims(pos, neg, 0.3);
    for (double& x : pos.a) x += 0.37;
    for (double& x : neg.a) x += 0.37;
    REQUIRE(info_nce_from_sims(pos, neg, 0.3) == Catch::Approx(base).margin(1e-12));
  }

  SECTION("finite at tiny temperature with bounded similarities") {
    Mat pos(3, 2), neg(3, 5);
    Rng rng(9);
    for (double& x : pos.a) x = rng.uniform(-1.0, 1.0);
    for (double& x : neg.a) x = rng.uniform(-1.0, 1.0);
    REQUIRE(std::isfinite(info_nce_from_sims(pos, neg, 1e-3)));
  }

  SECTION("gradient w.r.t. similarities matches central differences") {
    Rng rng(10);
    Mat pos(2, 2), neg(2, 3);
    for (double& x : pos.a) x = rng.uniform(-1.0, 1.0);
    for (double& x : neg.a) x = rng.uniform(-1.0, 1.0);
    Mat dpos, dneg;
    info_nce_from_sims(pos, neg, 0.4, &dpos, &dneg);
    const double step = 1e-6;
    auto check = [&](Mat& m, const Mat& grad) {
      for (size_t i = 0; i < m.a.size(); ++i) {
        const double saved = m.a[i];
        m.a[i] = saved + step;
        double up = info_nce_from_sims(pos, neg, 0.4);
        m.a[i] = saved - step;
        double down = info_nce_from_sims(pos, neg, 0.4);
        m.a[i] = saved;
        REQUIRE(grad.a[i] == Catch::Approx((up - down) / (2 * step)).margin(1e-6));
      }
    };
    check(pos, dpos);
    check(neg, dneg);
  }
}

TEST_CASE("track-level contrastive loss")
{
  Rng rng(11);
  const int len = 12, d = 6;

  auto random_track = [&](bool normalize) {
    Mat m(len, d);
    for (double& x : m.a) x = rng.normal();
    if (normalize)
      for (int t = 0; t < len; ++t) {
        double inv = 1.0 / norm2(m.row(t), d);
        for (int r = 0; r < d; ++r) m(t, r) *= inv;
      }
    return m;
  };

  SECTION("matches gathering the similarities by hand") {
    Mat clean = random_track(true);
    Mat n0 = random_track(true), n1 = random_track(true);
    ObjectiveConfig cfg;
    cfg.positives = 2;
    cfg.tau = 0.3;
    const int a0 = 5, a1 = 11;
    double loss = contrastive_loss(clean, {&n0, &n1}, a0, a1, cfg);

    Mat pos(a1 - a0 + 1, 2), neg(a1 - a0 + 1, 2);
    for (int c = a0; c <= a1; ++c) {
      for (int j = 1; j <= 2; ++j)
        pos(c - a0, j - 1) = similarity(clean.row(c), clean.row(c - j), d, cfg.similarity);
      neg(c - a0, 0) = similarity(clean.row(c), n0.row(c), d, cfg.similarity);
      neg(c - a0, 1) = similarity(clean.row(c), n1.row(c), d, cfg.similarity);
    }
    REQUIRE(loss == Catch::Approx(oracle::info_nce_direct(pos, neg, cfg.tau)).margin(1e-9));
  }

  SECTION("anchors without enough prior columns are skipped via the mask") {
    Mat clean = random_track(true);
    Mat n0 = random_track(true);
    ObjectiveConfig cfg;
    cfg.positives = 3;
    std::vector<uint8_t> valid(len, 0);
    for (int t = 4; t < len; ++t) valid[t] = 1;  // positions 0..3 invalid
    // anchors 5..6 need valid positions 2..5 -> anchor 5,6 partially blocked
    double loss_masked = contrastive_loss(clean, {&n0}, 7, 11, cfg, &valid);
    REQUIRE(std::isfinite(loss_masked));
    REQUIRE_THROWS_AS(contrastive_loss(clean, {&n0}, 3, 4, cfg, &valid), InsufficientHistory);
  }

  SECTION("gradient on track entries matches central differences") {
    Mat clean = random_track(false);
    Mat n0 = random_track(false);
    ObjectiveConfig cfg;
    cfg.positives = 2;
    cfg.tau = 0.5;
    const int a0 = 4, a1 = 9;
    Mat d_clean;
    std::vector<Mat> d_negs;
    contrastive_loss(clean, {&n0}, a0, a1, cfg, nullptr, &d_clean, &d_negs);
    const double step = 1e-6;
    auto loss_of = [&] { return contrastive_loss(clean, {&n0}, a0, a1, cfg); };
    for (size_t i = 0; i < clean.a.size(); ++i) {
      const double saved = clean.a[i];
      clean.a[i] = saved + step;
      double up = loss_of();
      clean.a[i] = saved - step;
      double down = loss_of();
      clean.a[i] = saved;
      REQUIRE(d_clean.a[i] == Catch::Approx((up - down) / (2 * step)).margin(2e-5));
    }
    for (size_t i = 0; i < n0.a.size(); ++i) {
      const double saved = n0.a[i];
      n0.a[i] = saved + step;
      double up = loss_of();
      n0.a[i] = saved - step;
      double down = loss_of();
      n0.a[i] = saved;
      REQUIRE(d_negs[0].a[i] == Catch::Approx((up - down) / (2 * step)).margin(2e-5));
    }
  }

  SECTION("negative-euclidean similarity works end to end") {
    Mat clean = random_track(false);
    Mat n0 = random_track(false);
    ObjectiveConfig cfg;
    cfg.positives = 1;
    cfg.similarity = SimilarityKind::NegEuclidean;
    REQUIRE(std::isfinite(contrastive_loss(clean, {&n0}, 2, 11, cfg)));
  }
}

TEST_CASE("total loss")
{
  REQUIRE(total_loss(1.5, 7.0, 0.0) == 1.5);
  REQUIRE(total_loss(1.0, 2.0, 0.5) == 2.0);
  // gradient with respect to the regularizer scales linearly in lambda
  const double g1 = (total_loss(1.0, 2.0 + 1e-6, 0.25) - total_loss(1.0, 2.0 - 1e-6, 0.25)) / 2e-6;
  const double g2 = (total_loss(1.0, 2.0 + 1e-6, 0.5) - total_loss(1.0, 2.0 - 1e-6, 0.5)) / 2e-6;
  REQUIRE(g2 == Catch::Approx(2.0 * g1).epsilon(1e-9));
}
