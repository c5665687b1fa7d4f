#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "igcl/evaluation.hpp"
#include "igcl/rng.hpp"
#include "oracles.hpp"

using namespace igcl;

namespace {

std::vector<Target> as_targets(const std::vector<int>& v) {
  std::vector<Target> out;
  for (int x : v) out.push_back(x == 2 ? Target::Excluded : static_cast<Target>(x));
  return out;
}

}  // namespace

TEST_CASE("confusion counts")
{
  SECTION("hand count") {
    auto c = confusion_counts(as_targets({1, 1, 0, 0, 1}), as_targets({1, 0, 0, 1, 1}));
    REQUIRE(c.tp == 2);
    REQUIRE(c.fp == 1);
    REQUIRE(c.fn == 1);
    REQUIRE(c.tn == 1);
  }
  SECTION("perfect flags") {
    auto c = confusion_counts(as_targets({1, 0, 1, 0}), as_targets({1, 0, 1, 0}));
    REQUIRE(c.fp == 0);
    REQUIRE(c.fn == 0);
  }
  SECTION("everything excluded") {
    auto c = confusion_counts(as_targets({2, 2}), as_targets({1, 0}));
    REQUIRE(c.total() == 0);
  }
  SECTION("length mismatch") {
    REQUIRE_THROWS_AS(confusion_counts(as_targets({1}), as_targets({1, 0})), LengthMismatch);
  }
  SECTION("exclusion on either side skips the point") {
    auto c = confusion_counts(as_targets({1, 2, 0}), as_targets({2, 1, 0}));
    REQUIRE(c.total() == 1);
    REQUIRE(c.tn == 1);
  }
}

TEST_CASE("precision, recall, F1")
{
  SECTION("hand values") {
    ConfusionCounts c{2, 1, 2, 0};
    Prf prf = precision_recall_f1(c);
    REQUIRE(prf.precision == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    REQUIRE(prf.recall == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(prf.f1 == Catch::Approx(4.0 / 7.0).epsilon(1e-12));
  }
  SECTION("degenerate counts give zeros") {
    Prf prf = precision_recall_f1(ConfusionCounts{0, 0, 0, 5});
    REQUIRE(prf.precision == 0.0);
    REQUIRE(prf.recall == 0.0);
    REQUIRE(prf.f1 == 0.0);
  }
  SECTION("perfect prediction") {
    Prf prf = precision_recall_f1(ConfusionCounts{7, 0, 0, 3});
    REQUIRE(prf.precision == 1.0);
    REQUIRE(prf.recall == 1.0);
    REQUIRE(prf.f1 == 1.0);
  }
  SECTION("permuting timestamps jointly changes nothing") {
    std::vector<int> flags{1, 0, 1, 1, 0, 0, 1}, targets{0, 0, 1, 1, 1, 0, 1};
    auto c1 = confusion_counts(as_targets(flags), as_targets(targets));
    std::vector<int> perm{3, 0, 6, 2, 5, 1, 4};
    std::vector<int> f2, t2;
    for (int i : perm) {
      f2.push_back(flags[i]);
      t2.push_back(targets[i]);
    }
    auto c2 = confusion_counts(as_targets(f2), as_targets(t2));
    REQUIRE(c1.tp == c2.tp);
    REQUIRE(c1.fp == c2.fp);
    REQUIRE(c1.fn == c2.fn);
    REQUIRE(c1.tn == c2.tn);
  }
}

TEST_CASE("roc auc")
{
  SECTION("perfect separation") {
    REQUIRE(roc_auc(Vec{1, 2, 3, 10, 11}, {0, 0, 0, 1, 1}) == 1.0);
  }
  SECTION("constant scores give one half via the tie rule") {
    REQUIRE(roc_auc(Vec{5, 5, 5, 5}, {0, 1, 0, 1}) == 0.5);
  }
  SECTION("single class is an error") {
    REQUIRE_THROWS_AS(roc_auc(Vec{1, 2}, {1, 1}), SingleClass);
  }
  SECTION("matches the pairwise oracle, ties included") {
    Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
      const int n = 20 + rng.uniform_int(0, 180);
      Vec scores(n);
      std::vector<int> labels(n);
      bool both = false;
      for (int i = 0; i < n; ++i) {
        scores[i] = rng.uniform_int(0, 30) * 0.125;  // force ties
        labels[i] = rng.uniform() < 0.3 ? 1 : 0;
      }
      labels[0] = 0;
      labels[1] = 1;
      both = true;
      REQUIRE(both);
      REQUIRE(roc_auc(scores, labels) ==
              Catch::Approx(oracle::auc_pairwise(scores, labels)).margin(1e-12));
    }
  }
  SECTION("invariant under strictly monotone transforms") {
    Rng rng(32);
    Vec scores(60);
    std::vector<int> labels(60);
    for (int i = 0; i < 60; ++i) {
      scores[i] = rng.normal();
      labels[i] = rng.uniform() < 0.4 ? 1 : 0;
    }
    labels[0] = 0;
    labels[1] = 1;
    Vec warped = scores;
    for (double& x : warped) x = std::exp(0.7 * x) + 3.0;
    REQUIRE(roc_auc(scores, labels) == Catch::Approx(roc_auc(warped, labels)).margin(1e-12));
  }
}

TEST_CASE("best F1 sweep")
{
  SECTION("separable instance reaches one at the smallest separating delta") {
    Vec scores{0.1, 0.2, 0.3, 5.0, 6.0};
    std::vector<int> labels{0, 0, 0, 1, 1};
    SweepResult r = best_f1_sweep(scores, labels);
    REQUIRE(r.f1 == 1.0);
    REQUIRE(r.delta == 5.0);
  }

  SECTION("matches exhaustive recomputation") {
    Rng rng(33);
    for (int trial = 0; trial < 80; ++trial) {
      const int n = 10 + rng.uniform_int(0, 90);
      Vec scores(n);
      std::vector<int> labels(n);
      for (int i = 0; i < n; ++i) {
        scores[i] = rng.uniform_int(0, 12) * 0.5;
        labels[i] = rng.uniform() < 0.35 ? 1 : 0;
      }
      labels[0] = 0;
      labels[1] = 1;
      SweepResult got = best_f1_sweep(scores, labels);
      auto [wd, wf] = oracle::best_f1_exhaustive(scores, labels);
      REQUIRE(got.f1 == Catch::Approx(wf).margin(1e-12));
      REQUIRE(got.delta == wd);
    }
  }

  SECTION("all scores equal: best of all-positive vs all-negative") {
    Vec scores(10, 2.5);
    std::vector<int> labels{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    SweepResult r = best_f1_sweep(scores, labels);
    // all-positive: tp=3 fp=7 fn=0 -> F1 = 6/13; all-negative: 0
    REQUIRE(r.f1 == Catch::Approx(6.0 / 13.0).margin(1e-12));
    REQUIRE(r.delta == 2.5);
  }

  SECTION("single class is an error") {
    REQUIRE_THROWS_AS(best_f1_sweep(Vec{1, 2}, {0, 0}), SingleClass);
  }
}

TEST_CASE("report serialization")
{
  EvalReport r;
  r.delta = 0.5;
  r.counts = {2, 1, 2, 0};
  r.fixed = precision_recall_f1(r.counts);
  r.auc = 0.9;
  r.best = {0.25, 0.8};
  r.excluded = 4;
  r.evaluated = 5;
  nlohmann::json j = report_to_json(r);
  REQUIRE(j["fixed"]["f1"].get<double>() == Catch::Approx(4.0 / 7.0));
  REQUIRE(j["best_f1"]["f1"].get<double>() == 0.8);
  REQUIRE(j["roc_auc"].get<double>() == 0.9);
  REQUIRE(j["excluded"].get<long>() == 4);
  std::string text = report_to_text(r);
  REQUIRE(text.find("precision") != std::string::npos);
}
