#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "igcl/evaluation.hpp"
#include "igcl/series.hpp"
#include "oracles.hpp"

#include <json.hpp>

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args, const fs::path& log) {
  std::string cmd = std::string(IGCL_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

const char* kSpec = R"({
  "n_vars": 2,
  "train_length": 600,
  "test_length": 400,
  "events": [
    {"onset": 700, "precursor_len": 16, "anomaly_len": 10, "variables": [0], "kind": "level-shift", "magnitude": 2.0},
    {"onset": 820, "precursor_len": 16, "anomaly_len": 10, "variables": [1], "kind": "spike-train", "magnitude": 2.0},
    {"onset": 940, "precursor_len": 16, "anomaly_len": 10, "variables": [0, 1], "kind": "trend-ramp", "magnitude": 2.0}
  ]
})";

const char* kTinyConfig = R"({
  "h": 4, "b": 12, "d": 8, "S": 3, "K": 2, "kernels": [2],
  "epochs": 2, "steps_per_epoch": 10, "seed": 5
})";

}  // namespace

TEST_CASE("cli pipeline")
{
  auto dir = oracle::temp_dir("cli");
  oracle::write_file(dir / "events.json", kSpec);
  oracle::write_file(dir / "run.json", kTinyConfig);
  auto log = dir / "log.txt";

  SECTION("synth is deterministic and loadable") {
    REQUIRE(run_cli("synth --spec " + (dir / "events.json").string() + " --out " +
                        (dir / "bench").string() + " --seed 7",
                    log) == 0);
    REQUIRE(run_cli("synth --spec " + (dir / "events.json").string() + " --out " +
                        (dir / "bench2").string() + " --seed 7",
                    log) == 0);
    REQUIRE(oracle::read_file(dir / "bench" / "train.csv") ==
            oracle::read_file(dir / "bench2" / "train.csv"));
    REQUIRE(oracle::read_file(dir / "bench" / "test.csv") ==
            oracle::read_file(dir / "bench2" / "test.csv"));
    igcl::SeriesFrame train = igcl::load_series_csv((dir / "bench" / "train.csv").string());
    igcl::SeriesFrame test = igcl::load_series_csv((dir / "bench" / "test.csv").string());
    REQUIRE(train.length() == 600);
    REQUIRE_FALSE(train.has_labels());
    REQUIRE(test.length() == 400);
    REQUIRE(test.has_labels());
    REQUIRE(fs::exists(dir / "bench" / "provenance.json"));
  }

  SECTION("invalid spec exits 2 and names the field") {
    oracle::write_file(dir / "bad.json", R"({"n_vars": 2, "train_len": 10})");
    int rc = run_cli("synth --spec " + (dir / "bad.json").string() + " --out " +
                         (dir / "x").string(),
                     log);
    REQUIRE(rc == 2);
    REQUIRE(oracle::read_file(log).find("train_len") != std::string::npos);
  }

  SECTION("missing input file exits 4") {
    int rc = run_cli("score --model nope.ckpt --data nope.csv --out " + (dir / "s.csv").string(),
                     log);
    REQUIRE(rc == 4);
  }

  SECTION("train, score, eval, plot round trip") {
    REQUIRE(run_cli("synth --spec " + (dir / "events.json").string() + " --out " +
                        (dir / "bench").string() + " --seed 7",
                    log) == 0);
    const std::string train_csv = (dir / "bench" / "train.csv").string();
    const std::string test_csv = (dir / "bench" / "test.csv").string();

    // same seed twice -> identical checkpoints
    REQUIRE(run_cli("train --data " + train_csv + " --config " + (dir / "run.json").string() +
                        " --out " + (dir / "m1.ckpt").string(),
                    log) == 0);
    std::string train_log = oracle::read_file(log);
    REQUIRE(train_log.find("epoch 1/2") != std::string::npos);
    REQUIRE(train_log.find("L_c=") != std::string::npos);
    REQUIRE(run_cli("train --data " + train_csv + " --config " + (dir / "run.json").string() +
                        " --out " + (dir / "m2.ckpt").string(),
                    log) == 0);
    REQUIRE(oracle::read_file(dir / "m1.ckpt") == oracle::read_file(dir / "m2.ckpt"));

    // epochs 0 still emits a checkpoint
    REQUIRE(run_cli("train --data " + train_csv + " --config " + (dir / "run.json").string() +
                        " --epochs 0 --out " + (dir / "m0.ckpt").string(),
                    log) == 0);
    REQUIRE(fs::exists(dir / "m0.ckpt"));

    // scoring: header carries delta, rows have the exact column set
    REQUIRE(run_cli("score --model " + (dir / "m1.ckpt").string() + " --data " + test_csv +
                        " --out " + (dir / "scores.csv").string(),
                    log) == 0);
    std::string scores_text = oracle::read_file(dir / "scores.csv");
    REQUIRE(scores_text.rfind("# delta=", 0) == 0);
    REQUIRE(scores_text.find("mode=quantile") != std::string::npos);
    REQUIRE(scores_text.find("t,score,flag,excluded") != std::string::npos);
    REQUIRE(run_cli("score --model " + (dir / "m1.ckpt").string() + " --data " + test_csv +
                        " --out " + (dir / "scores2.csv").string(),
                    log) == 0);
    REQUIRE(scores_text == oracle::read_file(dir / "scores2.csv"));

    // eval: report holds both threshold blocks and reconciled counts
    REQUIRE(run_cli("eval --scores " + (dir / "scores.csv").string() + " --data " + test_csv +
                        " --f 16 --h 4 --out " + (dir / "report.json").string() + " --warnings " +
                        (dir / "warnings.csv").string(),
                    log) == 0);
    auto report = nlohmann::json::parse(oracle::read_file(dir / "report.json"));
    REQUIRE(report.contains("fixed"));
    REQUIRE(report.contains("best_f1"));
    REQUIRE(report.contains("roc_auc"));
    long tp = report["fixed"]["tp"].get<long>();
    long fp = report["fixed"]["fp"].get<long>();
    long fn = report["fixed"]["fn"].get<long>();
    long tn = report["fixed"]["tn"].get<long>();
    REQUIRE(tp + fp + fn + tn == report["evaluated"].get<long>());
    REQUIRE(oracle::read_file(dir / "warnings.csv").rfind("onset,first_flag,lead", 0) == 0);

    // plot: valid deterministic SVG
    REQUIRE(run_cli("plot --scores " + (dir / "scores.csv").string() + " --data " + test_csv +
                        " --h 4 --f 16 --out " + (dir / "fig.svg").string(),
                    log) == 0);
    std::string svg = oracle::read_file(dir / "fig.svg");
    REQUIRE(svg.rfind("<svg", 0) == 0);
    REQUIRE(svg.find("</svg>") != std::string::npos);
    REQUIRE(run_cli("plot --scores " + (dir / "scores.csv").string() + " --data " + test_csv +
                        " --h 4 --f 16 --out " + (dir / "fig2.svg").string(),
                    log) == 0);
    REQUIRE(svg == oracle::read_file(dir / "fig2.svg"));

    // shaded spans: one rect per label run
    igcl::SeriesFrame test = igcl::load_series_csv(test_csv);
    int runs = 0;
    for (int t = 0; t < test.length(); ++t)
      if (test.labels[t] == 1 && (t == 0 || test.labels[t - 1] == 0)) ++runs;
    int shaded = 0;
    for (size_t pos = svg.find("#f4c7c3"); pos != std::string::npos;
         pos = svg.find("#f4c7c3", pos + 1))
      ++shaded;
    REQUIRE(shaded == runs);
  }

  SECTION("unknown config key exits 2") {
    oracle::write_file(dir / "badrun.json", R"({"h": 4, "bee": 12})");
    oracle::write_file(dir / "d.csv", "v0\n1\n2\n3\n");
    int rc = run_cli("train --data " + (dir / "d.csv").string() + " --config " +
                         (dir / "badrun.json").string() + " --out " + (dir / "m.ckpt").string(),
                     log);
    REQUIRE(rc == 2);
    REQUIRE(oracle::read_file(log).find("bee") != std::string::npos);
  }

  SECTION("eval on separable hand-written scores reaches best F1 of one") {
    // 40 rows; label a run near the end, scores separable by construction
    std::string data = "v0,label\n";
    std::string scores = "# delta=0.5 mode=fixed q=nan\nt,score,flag,excluded\n";
    for (int t = 0; t < 40; ++t) {
      bool anomaly = t >= 30 && t < 34;
      data += "1.0," + std::string(anomaly ? "1" : "0") + "\n";
      // targets with f=4: positive for t in [26, 29]
      bool target_pos = t >= 26 && t < 30;
      double sc = target_pos ? 1.0 : 0.0;
      scores += std::to_string(t) + "," + std::to_string(sc) + "," + (sc >= 0.5 ? "1" : "0") +
                ",0\n";
    }
    oracle::write_file(dir / "sep_data.csv", data);
    oracle::write_file(dir / "sep_scores.csv", scores);
    REQUIRE(run_cli("eval --scores " + (dir / "sep_scores.csv").string() + " --data " +
                        (dir / "sep_data.csv").string() + " --f 4 --h 2 --out " +
                        (dir / "sep_report.json").string(),
                    log) == 0);
    auto report = nlohmann::json::parse(oracle::read_file(dir / "sep_report.json"));
    REQUIRE(report["best_f1"]["f1"].get<double>() == 1.0);
    REQUIRE(report["fixed"]["f1"].get<double>() == 1.0);
  }
}
