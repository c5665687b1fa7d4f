#pragma once

// Training configuration and its JSON form. Every knob the pipeline uses is a
// named key; parsing rejects unknown keys so a typo cannot silently fall back
// to a default. The full (defaults-materialized) config travels inside every
// checkpoint.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "igcl/contrastive.hpp"
#include "igcl/errors.hpp"

namespace igcl {

struct TrainConfig {
  int lookback = 16;         // h
  int batch = 38;            // b; must satisfy b >= h + P + 1 (2h+P+2 covers full pairs)
  int lookahead = 16;        // f
  int positives = 3;         // P
  int bank_capacity = 16;    // K
  double tau = 0.1;
  double lambda = 0.1;
  int dim = 16;              // d
  std::vector<int> kernels{2, 3};
  int diffusion_steps = 20;  // S
  double beta_min = 1e-4;
  double beta_max = 0.1;
  double learning_rate = 1e-3;
  int epochs = 10;
  int anchors_per_step = 1;
  int steps_per_epoch = 0;  // 0 = derived from the series length
  uint64_t seed = 0;
  SimilarityKind similarity = SimilarityKind::Cosine;
  bool plain_tcn = false;
  bool store_literal_windows = false;
  double epsilon = 1e-5;  // instance normalization guard

  void validate() const {
    if (lookback < 1) throw ConfigError("h must be at least 1");
    if (batch < lookback + positives + 1)
      throw ConfigError("b must be at least h + P + 1 = " +
                        std::to_string(lookback + positives + 1));
    if (lookahead < 1) throw ConfigError("f must be at least 1");
    if (positives < 1) throw ConfigError("P must be at least 1");
    if (bank_capacity < 0) throw ConfigError("K must be nonnegative");
    if (!(tau > 0.0)) throw ConfigError("tau must be positive");
    if (lambda < 0.0) throw ConfigError("lambda must be nonnegative");
    if (dim < 1) throw ConfigError("d must be at least 1");
    if (kernels.empty()) throw ConfigError("kernel set must not be empty");
    for (int k : kernels)
      if (k < 2) throw ConfigError("kernel sizes must be at least 2");
    if (diffusion_steps < 1) throw ConfigError("S must be at least 1");
    if (!(0.0 <= beta_min && beta_min <= beta_max && beta_max < 1.0))
      throw ConfigError("need 0 <= beta_min <= beta_max < 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (epochs < 0) throw ConfigError("epochs must be nonnegative");
    if (anchors_per_step < 1) throw ConfigError("anchors_per_step must be at least 1");
    if (steps_per_epoch < 0) throw ConfigError("steps_per_epoch must be nonnegative");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  }

  ObjectiveConfig objective() const {
    ObjectiveConfig o;
    o.tau = tau;
    o.positives = positives;
    o.lambda = lambda;
    o.similarity = similarity;
    return o;
  }
};

inline nlohmann::json config_to_json(const TrainConfig& c) {
  return nlohmann::json{{"h", c.lookback},
                        {"b", c.batch},
                        {"f", c.lookahead},
                        {"P", c.positives},
                        {"K", c.bank_capacity},
                        {"tau", c.tau},
                        {"lambda", c.lambda},
                        {"d", c.dim},
                        {"kernels", c.kernels},
                        {"S", c.diffusion_steps},
                        {"beta_min", c.beta_min},
                        {"beta_max", c.beta_max},
                        {"learning_rate", c.learning_rate},
                        {"epochs", c.epochs},
                        {"anchors_per_step", c.anchors_per_step},
                        {"steps_per_epoch", c.steps_per_epoch},
                        {"seed", c.seed},
                        {"similarity", to_string(c.similarity)},
                        {"plain_tcn", c.plain_tcn},
                        {"store_literal_windows", c.store_literal_windows},
                        {"epsilon", c.epsilon}};
}

/// Parses a config document. Unknown keys are rejected by name; every known
/// key is optional and falls back to the default.
inline TrainConfig config_from_json(const nlohmann::json& j,
                                    const std::vector<std::string>& extra_allowed = {}) {
  static const std::vector<std::string> known = {
      "h",      "b",        "f",      "P",       "K",        "tau",
      "lambda", "d",        "kernels", "S",      "beta_min", "beta_max",
      "learning_rate", "epochs", "anchors_per_step", "steps_per_epoch",
      "seed",   "similarity", "plain_tcn", "store_literal_windows", "epsilon"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    bool ok = std::find(known.begin(), known.end(), key) != known.end() ||
              std::find(extra_allowed.begin(), extra_allowed.end(), key) != extra_allowed.end();
    if (!ok) throw ConfigError("unknown config key '" + key + "'");
  }
  TrainConfig c;
  try {
    if (j.contains("h")) c.lookback = j.at("h").get<int>();
    if (j.contains("b")) c.batch = j.at("b").get<int>();
    if (j.contains("f")) c.lookahead = j.at("f").get<int>();
    if (j.contains("P")) c.positives = j.at("P").get<int>();
    if (j.contains("K")) c.bank_capacity = j.at("K").get<int>();
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("lambda")) c.lambda = j.at("lambda").get<double>();
    if (j.contains("d")) c.dim = j.at("d").get<int>();
    if (j.contains("kernels")) c.kernels = j.at("kernels").get<std::vector<int>>();
    if (j.contains("S")) c.diffusion_steps = j.at("S").get<int>();
    if (j.contains("beta_min")) c.beta_min = j.at("beta_min").get<double>();
    if (j.contains("beta_max")) c.beta_max = j.at("beta_max").get<double>();
    if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<int>();
    if (j.contains("anchors_per_step")) c.anchors_per_step = j.at("anchors_per_step").get<int>();
    if (j.contains("steps_per_epoch")) c.steps_per_epoch = j.at("steps_per_epoch").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("similarity"))
      c.similarity = similarity_kind_from_string(j.at("similarity").get<std::string>());
    if (j.contains("plain_tcn")) c.plain_tcn = j.at("plain_tcn").get<bool>();
    if (j.contains("store_literal_windows"))
      c.store_literal_windows = j.at("store_literal_windows").get<bool>();
    if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace igcl
