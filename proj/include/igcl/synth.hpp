#pragma once

// Synthetic benchmark generator: seeded sinusoid + AR(1) baselines, precursor
// and anomaly event injection with controllable variable combinations, and
// train/test CSV emission. Anomaly points are labeled; precursor points are
// not — there are no labeled precursors in the problem setting.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "igcl/errors.hpp"
#include "igcl/rng.hpp"
#include "igcl/series.hpp"

namespace igcl {

enum class PrecursorKind { SpikeTrain, LevelShift, TrendRamp, FrequencyShift, None };

inline const char* to_string(PrecursorKind k) {
  switch (k) {
    case PrecursorKind::SpikeTrain: return "spike-train";
    case PrecursorKind::LevelShift: return "level-shift";
    case PrecursorKind::TrendRamp: return "trend-ramp";
    case PrecursorKind::FrequencyShift: return "frequency-shift";
    case PrecursorKind::None: return "none";
  }
  return "?";
}

inline PrecursorKind precursor_kind_from_string(const std::string& s) {
  if (s == "spike-train") return PrecursorKind::SpikeTrain;
  if (s == "level-shift") return PrecursorKind::LevelShift;
  if (s == "trend-ramp") return PrecursorKind::TrendRamp;
  if (s == "frequency-shift") return PrecursorKind::FrequencyShift;
  if (s == "none") return PrecursorKind::None;
  throw ConfigError("unknown precursor kind '" + s + "'");
}

/// One injected event: a precursor of length precursor_len immediately before
/// the anomaly at [onset, onset+anomaly_len). The precursor perturbs only the
/// affected variables; the anomaly applies the same waveform at 3x magnitude
/// and is the only part that gets labels.
struct EventSpec {
  int onset = 0;
  int precursor_len = 0;
  int anomaly_len = 0;
  std::vector<int> variables;
  PrecursorKind kind = PrecursorKind::LevelShift;
  double magnitude = 1.0;

  int first_index() const { return onset - precursor_len; }
  int end_index() const { return onset + anomaly_len; }
};

inline SeriesFrame generate_normal_series(int n_vars, int length, uint64_t seed) {
  if (n_vars < 1 || length < 1) throw OutOfRange("n_vars and length must be at least 1");
  SeriesFrame frame;
  frame.values = Mat(n_vars, length);
  frame.timestamps.resize(length);
  frame.labels.assign(length, 0);
  constexpr double kBase = 1704067200.0;  // 2024-01-01 00:00 UTC, a Monday
  for (int t = 0; t < length; ++t) frame.timestamps[t] = kBase + 60.0 * t;

  Rng rng(seed);
  constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
  for (int v = 0; v < n_vars; ++v) {
    frame.names.push_back("v" + std::to_string(v));
    int n_comp = rng.uniform_int(1, 3);
    std::vector<double> amp(n_comp), period(n_comp), phase(n_comp);
    for (int c = 0; c < n_comp; ++c) {
      amp[c] = rng.uniform(0.5, 1.5);
      period[c] = rng.uniform(20.0, 200.0);
      phase[c] = rng.uniform(0.0, kTwoPi);
    }
    double ar = 0.0;
    for (int t = 0; t < length; ++t) {
      double s = 0.0;
      for (int c = 0; c < n_comp; ++c) s += amp[c] * std::sin(kTwoPi * t / period[c] + phase[c]);
      ar = 0.7 * ar + 0.1 * rng.normal();
      frame.values(v, t) = s + ar;
    }
  }
  return frame;
}

namespace detail {

inline double unit_wave(PrecursorKind kind, int i, int len, double sign, double period) {
  switch (kind) {
    case PrecursorKind::SpikeTrain: {
      int gap = std::max(2, len / 6);
      if (i % gap != 0) return 0.0;
      return sign * ((i / gap) % 2 == 0 ? 1.0 : -1.0);
    }
    case PrecursorKind::LevelShift:
      return sign;
    case PrecursorKind::TrendRamp:
      return sign * static_cast<double>(i + 1) / static_cast<double>(len);
    case PrecursorKind::FrequencyShift:
      return sign * std::sin(2.0 * 3.14159265358979323846 * i / period);
    case PrecursorKind::None:
      return 0.0;
  }
  return 0.0;
}

}  // namespace detail

inline SeriesFrame inject_precursor_events(const SeriesFrame& frame, std::vector<EventSpec> specs,
                                           uint64_t seed) {
  const int T = frame.length();
  for (const EventSpec& e : specs) {
    if (e.precursor_len < 0 || e.anomaly_len < 1)
      throw OutOfRange("event at onset " + std::to_string(e.onset) + " has bad lengths");
    if (e.first_index() < 0 || e.end_index() > T)
      throw OutOfRange("event at onset " + std::to_string(e.onset) + " does not fit the series");
    if (e.kind != PrecursorKind::None && e.variables.empty())
      throw ConfigError("event at onset " + std::to_string(e.onset) + " affects no variables");
    for (int v : e.variables)
      if (v < 0 || v >= frame.vars())
        throw OutOfRange("event variable " + std::to_string(v) + " out of range");
    if (!std::isfinite(e.magnitude)) throw ConfigError("event magnitude must be finite");
  }
  std::sort(specs.begin(), specs.end(),
            [](const EventSpec& a, const EventSpec& b) { return a.first_index() < b.first_index(); });
  for (size_t i = 1; i < specs.size(); ++i)
    if (specs[i - 1].end_index() > specs[i].first_index())
      throw OverlapError("events at onsets " + std::to_string(specs[i - 1].onset) + " and " +
                         std::to_string(specs[i].onset) + " overlap");

  SeriesFrame out = frame;
  if (!out.has_labels()) out.labels.assign(T, 0);

  Rng rng(seed);
  for (const EventSpec& e : specs) {
    double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    double period = rng.uniform(4.0, std::max(5.0, e.precursor_len / 2.0));
    if (e.kind != PrecursorKind::None && e.precursor_len > 0) {
      int start = e.onset - e.precursor_len;
      for (int v : e.variables)
        for (int i = 0; i < e.precursor_len; ++i)
          out.values(v, start + i) +=
              e.magnitude * detail::unit_wave(e.kind, i, e.precursor_len, sign, period);
    }
    // Anomaly burst: same waveform family at 3x magnitude; kind=none events
    // have no precursor but still need a real anomaly, so they burst as a
    // spike train.
    PrecursorKind akind = e.kind == PrecursorKind::None ? PrecursorKind::SpikeTrain : e.kind;
    for (int v : e.variables)
      for (int i = 0; i < e.anomaly_len; ++i)
        out.values(v, e.onset + i) +=
            3.0 * e.magnitude * detail::unit_wave(akind, i, e.anomaly_len, sign, period);
    for (int i = 0; i < e.anomaly_len; ++i) out.labels[e.onset + i] = 1;
  }
  return out;
}

inline void write_series_csv(const SeriesFrame& frame, const std::string& path,
                             bool include_labels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  char buf[64];
  if (frame.has_timestamps()) out << "timestamp,";
  for (int v = 0; v < frame.vars(); ++v) {
    if (v) out << ',';
    out << (v < static_cast<int>(frame.names.size()) && !frame.names[v].empty()
                ? frame.names[v]
                : "v" + std::to_string(v));
  }
  if (include_labels && frame.has_labels()) out << ",label";
  out << '\n';
  for (int t = 0; t < frame.length(); ++t) {
    if (frame.has_timestamps()) {
      std::snprintf(buf, sizeof buf, "%.17g", frame.timestamps[t]);
      out << buf << ',';
    }
    for (int v = 0; v < frame.vars(); ++v) {
      if (v) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", frame.values(v, t));
      out << buf;
    }
    if (include_labels && frame.has_labels()) out << ',' << frame.labels[t];
    out << '\n';
  }
  out.flush();
  if (!out) throw IoError("failed writing " + path);
}

inline SeriesFrame slice_frame(const SeriesFrame& frame, int begin, int end) {
  if (begin < 0 || end > frame.length() || begin >= end)
    throw OutOfRange("bad slice [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
  SeriesFrame out;
  out.values = Mat(frame.vars(), end - begin);
  for (int v = 0; v < frame.vars(); ++v)
    for (int t = begin; t < end; ++t) out.values(v, t - begin) = frame.values(v, t);
  if (frame.has_timestamps())
    out.timestamps.assign(frame.timestamps.begin() + begin, frame.timestamps.begin() + end);
  if (frame.has_labels())
    out.labels.assign(frame.labels.begin() + begin, frame.labels.begin() + end);
  out.names = frame.names;
  return out;
}

/// Splits a labeled frame at train_length and writes train.csv (the
/// label-free, anomaly-free prefix) and test.csv (with labels). The prefix
/// must be genuinely normal: any labeled point before the split is an error.
inline void write_benchmark(const SeriesFrame& frame, int train_length, const std::string& dir) {
  if (!frame.has_labels()) throw MissingLabels("benchmark frame has no labels");
  if (train_length < 1 || train_length >= frame.length())
    throw OutOfRange("train_length " + std::to_string(train_length) + " out of range");
  for (int t = 0; t < train_length; ++t)
    if (frame.labels[t] != 0)
      throw ConfigError("labeled anomaly at index " + std::to_string(t) +
                        " inside the training prefix");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);
  write_series_csv(slice_frame(frame, 0, train_length), dir + "/train.csv", false);
  write_series_csv(slice_frame(frame, train_length, frame.length()), dir + "/test.csv", true);
}

}  // namespace igcl
