// Command-line surface for the IGCL pipeline:
//   igcl synth  — generate a synthetic benchmark from an event spec
//   igcl train  — train a model on an unlabeled series
//   igcl score  — sliding-window anomaly-prediction scores
//   igcl eval   — precision/recall/F1 and ROC-AUC against future-anomaly targets
//   igcl plot   — static SVG of the score trace
//
// Exit codes: 0 success, 2 usage/config, 3 numerical failure, 4 I/O.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "igcl/igcl.hpp"

namespace {

using nlohmann::json;

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw igcl::IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw igcl::ConfigError(path + " is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw igcl::IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw igcl::IoError("failed writing " + path);
}

igcl::EventSpec event_from_json(const json& j) {
  static const std::vector<std::string> keys = {"onset",     "precursor_len", "anomaly_len",
                                                "variables", "kind",          "magnitude"};
  if (!j.is_object()) throw igcl::ConfigError("each event must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      throw igcl::ConfigError("unknown event key '" + it.key() + "'");
  igcl::EventSpec e;
  try {
    e.onset = j.at("onset").get<int>();
    e.anomaly_len = j.at("anomaly_len").get<int>();
    if (j.contains("precursor_len")) e.precursor_len = j.at("precursor_len").get<int>();
    if (j.contains("variables")) e.variables = j.at("variables").get<std::vector<int>>();
    if (j.contains("kind"))
      e.kind = igcl::precursor_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("magnitude")) e.magnitude = j.at("magnitude").get<double>();
  } catch (const json::exception& ex) {
    throw igcl::ConfigError(std::string("bad event field: ") + ex.what());
  }
  return e;
}

struct SynthSpec {
  int n_vars = 5;
  int train_length = 20000;
  int test_length = 5000;
  std::vector<igcl::EventSpec> events;
};

SynthSpec synth_spec_from_json(const json& j) {
  static const std::vector<std::string> keys = {"n_vars", "train_length", "test_length", "events"};
  if (!j.is_object()) throw igcl::ConfigError("synth spec must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(keys.begin(), keys.end(), it.key()) == keys.end())
      throw igcl::ConfigError("unknown synth spec key '" + it.key() + "'");
  SynthSpec spec;
  try {
    if (j.contains("n_vars")) spec.n_vars = j.at("n_vars").get<int>();
    if (j.contains("train_length")) spec.train_length = j.at("train_length").get<int>();
    if (j.contains("test_length")) spec.test_length = j.at("test_length").get<int>();
    if (j.contains("events"))
      for (const json& ej : j.at("events")) spec.events.push_back(event_from_json(ej));
  } catch (const json::exception& ex) {
    throw igcl::ConfigError(std::string("bad synth spec field: ") + ex.what());
  }
  if (spec.n_vars < 1 || spec.train_length < 1 || spec.test_length < 1)
    throw igcl::ConfigError("n_vars, train_length and test_length must be positive");
  for (const igcl::EventSpec& e : spec.events)
    if (e.first_index() < spec.train_length)
      throw igcl::ConfigError("event at onset " + std::to_string(e.onset) +
                              " reaches into the training prefix");
  return spec;
}

void write_scores_csv(const igcl::ScoreSeries& scores, const std::string& mode, double quantile,
                      const std::string& path) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "# delta=%.17g mode=%s q=%.17g\n", scores.delta, mode.c_str(),
                quantile);
  out += buf;
  out += "t,score,flag,excluded\n";
  for (int t = 0; t < scores.length(); ++t) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%d,%d\n", t, scores.score[t],
                  static_cast<int>(scores.flags[t]), static_cast<int>(scores.excluded[t]));
    out += buf;
  }
  write_text_file(path, out);
}

igcl::ScoreSeries read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw igcl::IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw igcl::MalformedCsv(path + " is empty");
  igcl::ScoreSeries scores;
  if (line.rfind("# delta=", 0) == 0) {
    size_t sp = line.find(' ', 8);
    std::string tok = line.substr(8, sp == std::string::npos ? std::string::npos : sp - 8);
    double d = 0.0;
    if (igcl::detail::parse_cell(tok, d)) scores.delta = d;
    if (!std::getline(in, line)) throw igcl::MalformedCsv(path + " has no header row");
  }
  if (igcl::detail::trim(line) != "t,score,flag,excluded")
    throw igcl::MalformedCsv(path + " header must be t,score,flag,excluded");
  while (std::getline(in, line)) {
    if (igcl::detail::trim(line).empty()) continue;
    auto cells = igcl::detail::split_csv_line(line);
    if (cells.size() != 4) throw igcl::MalformedCsv(path + " row with " +
                                                    std::to_string(cells.size()) + " cells");
    double score = 0.0, flag = 0.0, excl = 0.0;
    bool have_score = igcl::detail::parse_cell(cells[1], score);
    if (!igcl::detail::parse_cell(cells[2], flag) || !igcl::detail::parse_cell(cells[3], excl))
      throw igcl::MalformedCsv(path + " has a bad row: " + line);
    scores.score.push_back(have_score ? score : std::numeric_limits<double>::quiet_NaN());
    scores.flags.push_back(flag != 0.0 ? 1 : 0);
    scores.excluded.push_back(excl != 0.0 ? 1 : 0);
  }
  if (scores.score.empty()) throw igcl::EmptyScores(path + " has no rows");
  return scores;
}

void write_warnings_csv(const std::vector<igcl::Warning>& warnings, const std::string& path) {
  std::string out = "onset,first_flag,lead\n";
  for (const igcl::Warning& w : warnings)
    out += std::to_string(w.onset) + "," + std::to_string(w.first_flag) + "," +
           std::to_string(w.lead) + "\n";
  write_text_file(path, out);
}

int classify_error(const std::exception& e) {
  if (dynamic_cast<const igcl::NonFiniteLoss*>(&e) ||
      dynamic_cast<const igcl::NonPositiveSigma*>(&e))
    return 3;
  if (dynamic_cast<const igcl::IoError*>(&e) || dynamic_cast<const igcl::MalformedCsv*>(&e) ||
      dynamic_cast<const igcl::EmptySeries*>(&e) ||
      dynamic_cast<const igcl::CorruptCheckpoint*>(&e))
    return 4;
  if (dynamic_cast<const igcl::Error*>(&e)) return 2;
  return 1;
}

struct TrainOverrides {
  std::optional<int> epochs, K, h, b, f, d;
  std::optional<uint64_t> seed;
  std::optional<double> lr;
};

igcl::TrainConfig resolve_config(const std::string& config_path, const TrainOverrides& ov,
                                 std::string* data_path, std::string* out_path) {
  igcl::TrainConfig cfg;
  if (!config_path.empty()) {
    json doc = load_json_file(config_path);
    cfg = igcl::config_from_json(doc, {"data", "out"});
    if (doc.contains("data") && data_path && data_path->empty())
      *data_path = doc.at("data").get<std::string>();
    if (doc.contains("out") && out_path && out_path->empty())
      *out_path = doc.at("out").get<std::string>();
  }
  if (ov.epochs) cfg.epochs = *ov.epochs;
  if (ov.K) cfg.bank_capacity = *ov.K;
  if (ov.h) cfg.lookback = *ov.h;
  if (ov.b) cfg.batch = *ov.b;
  if (ov.f) cfg.lookahead = *ov.f;
  if (ov.d) cfg.dim = *ov.d;
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.lr) cfg.learning_rate = *ov.lr;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IGCL: unsupervised time-series anomaly prediction"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark");
  std::string synth_spec_path, synth_out;
  uint64_t synth_seed = 0;
  synth->add_option("--spec", synth_spec_path, "event spec JSON")->required();
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--seed", synth_seed, "generator seed");

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string train_data, train_config, train_out;
  TrainOverrides ov;
  train_cmd->add_option("--data", train_data, "training CSV");
  train_cmd->add_option("--config", train_config, "run config JSON");
  train_cmd->add_option("--out", train_out, "checkpoint path");
  int ov_epochs, ov_K, ov_h, ov_b, ov_f, ov_d;
  uint64_t ov_seed;
  double ov_lr;
  train_cmd->add_option("--epochs", ov_epochs)->each([&](const std::string&) { ov.epochs = ov_epochs; });
  train_cmd->add_option("--K", ov_K)->each([&](const std::string&) { ov.K = ov_K; });
  train_cmd->add_option("--h", ov_h)->each([&](const std::string&) { ov.h = ov_h; });
  train_cmd->add_option("--b", ov_b)->each([&](const std::string&) { ov.b = ov_b; });
  train_cmd->add_option("--f", ov_f)->each([&](const std::string&) { ov.f = ov_f; });
  train_cmd->add_option("--d", ov_d)->each([&](const std::string&) { ov.d = ov_d; });
  train_cmd->add_option("--seed", ov_seed)->each([&](const std::string&) { ov.seed = ov_seed; });
  train_cmd->add_option("--lr", ov_lr)->each([&](const std::string&) { ov.lr = ov_lr; });

  // ---- score ----
  auto* score_cmd = app.add_subcommand("score", "score a series");
  std::string score_model, score_data, score_out;
  double score_delta = std::numeric_limits<double>::quiet_NaN();
  double score_quantile = 0.95;
  int score_stride = 1;
  bool have_delta = false;
  score_cmd->add_option("--model", score_model)->required();
  score_cmd->add_option("--data", score_data)->required();
  score_cmd->add_option("--out", score_out)->required();
  score_cmd->add_option("--delta", score_delta)->each([&](const std::string&) { have_delta = true; });
  score_cmd->add_option("--quantile", score_quantile, "calibration quantile (default 0.95)");
  score_cmd->add_option("--stride", score_stride);

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "evaluate scores against labels");
  std::string eval_scores, eval_data, eval_out, eval_warnings;
  int eval_f = igcl::TrainConfig().lookahead;
  int eval_h = igcl::TrainConfig().lookback;
  bool include_contaminated = false;
  eval_cmd->add_option("--scores", eval_scores)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--out", eval_out)->required();
  eval_cmd->add_option("--f", eval_f, "look-forward window");
  eval_cmd->add_option("--h", eval_h, "look-back window (contamination exclusion)");
  eval_cmd->add_flag("--include-contaminated", include_contaminated,
                     "keep timestamps whose current window holds a labeled anomaly");
  eval_cmd->add_option("--warnings", eval_warnings, "also write early warnings CSV");

  // ---- plot ----
  auto* plot_cmd = app.add_subcommand("plot", "render a score SVG");
  std::string plot_scores, plot_data, plot_out;
  int plot_h = igcl::TrainConfig().lookback;
  int plot_f = igcl::TrainConfig().lookahead;
  plot_cmd->add_option("--scores", plot_scores)->required();
  plot_cmd->add_option("--data", plot_data)->required();
  plot_cmd->add_option("--out", plot_out)->required();
  plot_cmd->add_option("--h", plot_h);
  plot_cmd->add_option("--f", plot_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      json doc = load_json_file(synth_spec_path);
      SynthSpec spec = synth_spec_from_json(doc);
      igcl::SeriesFrame frame = igcl::generate_normal_series(
          spec.n_vars, spec.train_length + spec.test_length, synth_seed);
      frame = igcl::inject_precursor_events(frame, spec.events, synth_seed + 1);
      igcl::write_benchmark(frame, spec.train_length, synth_out);
      json prov;
      prov["seed"] = synth_seed;
      prov["spec"] = doc;
      write_text_file(synth_out + "/provenance.json", prov.dump(2) + "\n");
      std::printf("wrote %s/train.csv (%d rows) and %s/test.csv (%d rows)\n", synth_out.c_str(),
                  spec.train_length, synth_out.c_str(), spec.test_length);
    } else if (train_cmd->parsed()) {
      std::string data = train_data, out = train_out;
      igcl::TrainConfig cfg = resolve_config(train_config, ov, &data, &out);
      if (data.empty()) throw igcl::ConfigError("no training data given (--data or config key)");
      if (out.empty()) throw igcl::ConfigError("no output path given (--out or config key)");
      igcl::SeriesFrame frame = igcl::load_series_csv(data);
      igcl::ModelState state = igcl::train(frame, cfg, [](const igcl::EpochMetrics& m) {
        std::printf("epoch %d/%d  L_c=%.6f  L_r=%.6f  bank=%d\n", m.epoch, m.epochs,
                    m.mean_contrastive, m.mean_regularization, m.bank_fill);
        std::fflush(stdout);
      });
      igcl::save_checkpoint(state, out);
      std::printf("wrote %s\n", out.c_str());
    } else if (score_cmd->parsed()) {
      igcl::ModelState state = igcl::load_checkpoint(score_model);
      igcl::SeriesFrame frame = igcl::load_series_csv(score_data);
      igcl::ScoreSeries scores = igcl::score_series(state, frame, score_stride);
      std::string mode = have_delta ? "fixed" : "quantile";
      double delta = have_delta ? score_delta : igcl::calibrate_threshold(scores, score_quantile);
      igcl::apply_threshold(scores, delta);
      write_scores_csv(scores, mode, have_delta ? std::numeric_limits<double>::quiet_NaN()
                                                : score_quantile,
                       score_out);
      std::printf("wrote %s (delta=%.6g, %s)\n", score_out.c_str(), delta, mode.c_str());
    } else if (eval_cmd->parsed()) {
      igcl::ScoreSeries scores = read_scores_csv(eval_scores);
      if (std::isfinite(scores.delta)) igcl::apply_threshold(scores, scores.delta);
      igcl::SeriesFrame frame = igcl::load_series_csv(eval_data);
      if (!frame.has_labels()) throw igcl::MissingLabels(eval_data + " has no label column");
      std::vector<igcl::Target> targets =
          igcl::future_anomaly_targets(frame, eval_f, eval_h, !include_contaminated);
      igcl::EvalReport report = igcl::evaluate_scores(scores, targets);
      json out = igcl::report_to_json(report);
      out["config"] = {{"f", eval_f}, {"h", eval_h}, {"exclude_contaminated", !include_contaminated}};
      write_text_file(eval_out, out.dump(2) + "\n");
      std::fputs(igcl::report_to_text(report).c_str(), stdout);
      if (!eval_warnings.empty()) {
        auto warnings = igcl::early_warnings(scores, frame.labels, eval_h, eval_f);
        write_warnings_csv(warnings, eval_warnings);
      }
    } else if (plot_cmd->parsed()) {
      igcl::ScoreSeries scores = read_scores_csv(plot_scores);
      if (std::isfinite(scores.delta)) igcl::apply_threshold(scores, scores.delta);
      igcl::SeriesFrame frame = igcl::load_series_csv(plot_data);
      std::vector<igcl::Warning> warnings;
      if (frame.has_labels())
        warnings = igcl::early_warnings(scores, frame.labels, plot_h, plot_f);
      write_text_file(plot_out,
                      igcl::render_score_svg(scores, frame.labels, warnings));
      std::printf("wrote %s\n", plot_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return classify_error(e);
  }
  return 0;
}
