#pragma once

// Multivariate series data model: CSV ingestion, anchored window segments,
// per-segment instance normalization, cyclical time attributes, and
// look-ahead targets for prediction evaluation. All operations are pure.

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "igcl/errors.hpp"
#include "igcl/mat.hpp"

namespace igcl {

struct SeriesFrame {
  Mat values;                      // N variables x T timestamps
  std::vector<double> timestamps;  // empty, or size T and strictly increasing
  std::vector<int> labels;         // empty, or size T with values in {0, 1}
  std::vector<std::string> names;  // empty, or one name per variable

  int vars() const { return values.rows; }
  int length() const { return values.cols; }
  bool has_timestamps() const { return !timestamps.empty(); }
  bool has_labels() const { return !labels.empty(); }
};

enum class MissingPolicy { Reject, ForwardFill };

struct CsvOptions {
  MissingPolicy missing = MissingPolicy::Reject;
};

/// Per-timestamp prediction target. Excluded marks timestamps that cannot be
/// evaluated (insufficient look-ahead, or a contaminated current window).
enum class Target : int { Negative = 0, Positive = 1, Excluded = 2 };

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

/// Parses a full cell as a double. Returns false for empty or unparsable
/// cells; the caller decides how missing values are handled.
inline bool parse_cell(const std::string& cell, double& out) {
  std::string t = trim(cell);
  if (t.empty()) return false;
  const char* b = t.data();
  const char* e = b + t.size();
  auto res = std::from_chars(b, e, out);
  return res.ec == std::errc() && res.ptr == e;
}

inline double floor_mod(double x, double m) {
  double r = std::fmod(x, m);
  return r < 0 ? r + m : r;
}

}  // namespace detail

/// Loads a series from a headered CSV file. Column names "timestamp" and
/// "label" are reserved; every other column is a variable, in file order.
inline SeriesFrame load_series_csv(const std::string& path, const CsvOptions& options = {}) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) throw EmptySeries(path + " has no header row");

  std::vector<std::string> header = detail::split_csv_line(lines[0]);
  int ts_col = -1, label_col = -1;
  std::vector<int> var_cols;
  std::vector<std::string> names;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    std::string name = detail::trim(header[c]);
    if (name == "timestamp") {
      ts_col = c;
    } else if (name == "label") {
      label_col = c;
    } else {
      var_cols.push_back(c);
      names.push_back(name);
    }
  }
  if (var_cols.empty()) throw MalformedCsv(path + " has no variable columns");

  const int n_vars = static_cast<int>(var_cols.size());
  const int n_rows = static_cast<int>(lines.size()) - 1;
  if (n_rows == 0) throw EmptySeries(path + " has no data rows");

  SeriesFrame frame;
  frame.values = Mat(n_vars, n_rows);
  frame.names = names;
  if (ts_col >= 0) frame.timestamps.resize(n_rows);
  if (label_col >= 0) frame.labels.resize(n_rows);

  for (int t = 0; t < n_rows; ++t) {
    std::vector<std::string> cells = detail::split_csv_line(lines[t + 1]);
    if (cells.size() != header.size())
      throw MalformedCsv(path + " row " + std::to_string(t + 2) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(header.size()));
    for (int v = 0; v < n_vars; ++v) {
      double x = 0.0;
      bool ok = detail::parse_cell(cells[var_cols[v]], x) && std::isfinite(x);
      if (!ok) {
        if (options.missing == MissingPolicy::Reject || t == 0)
          throw MalformedCsv(path + " row " + std::to_string(t + 2) + " column '" +
                             (names[v].empty() ? std::to_string(v) : names[v]) +
                             "' is not a finite number");
        x = frame.values(v, t - 1);
      }
      frame.values(v, t) = x;
    }
    if (ts_col >= 0) {
      double ts = 0.0;
      if (!detail::parse_cell(cells[ts_col], ts) || !std::isfinite(ts))
        throw MalformedCsv(path + " row " + std::to_string(t + 2) + " has a bad timestamp");
      if (t > 0 && ts <= frame.timestamps[t - 1])
        throw MalformedCsv(path + " timestamps are not strictly increasing at row " +
                           std::to_string(t + 2));
      frame.timestamps[t] = ts;
    }
    if (label_col >= 0) {
      double lb = 0.0;
      if (!detail::parse_cell(cells[label_col], lb) || (lb != 0.0 && lb != 1.0))
        throw MalformedCsv(path + " row " + std::to_string(t + 2) + " has a label outside {0,1}");
      frame.labels[t] = static_cast<int>(lb);
    }
  }
  return frame;
}

/// The batch of the b most recent look-back windows anchored at index t.
/// The data slice covers series indices [t-b+1-h, t]; window j (0-based)
/// covers [t-j-h, t-j].
struct WindowSegment {
  int anchor_t = 0;  // t
  int lookback = 0;  // h
  int batch = 0;     // b
  Mat data;          // N x (b+h)
  std::vector<double> timestamps;  // aligned slice, empty if the frame has none

  int length() const { return data.cols; }
  int start_index() const { return anchor_t - batch + 1 - lookback; }

  /// Column offset of window j's first point within `data`.
  int window_offset(int j) const { return batch - 1 - j; }

  Mat window(int j) const {
    if (j < 0 || j >= batch) throw OutOfRange("window index " + std::to_string(j));
    Mat w(data.rows, lookback + 1);
    int off = window_offset(j);
    for (int r = 0; r < data.rows; ++r)
      for (int c = 0; c <= lookback; ++c) w(r, c) = data(r, off + c);
    return w;
  }
};

inline WindowSegment make_segment(const SeriesFrame& frame, int t, int h, int b) {
  if (h < 1 || b < 1) throw OutOfRange("h and b must be at least 1");
  if (t >= frame.length()) throw OutOfRange("anchor " + std::to_string(t) + " beyond series end");
  if (t - b + 1 - h < 0)
    throw OutOfRange("segment [" + std::to_string(t - b + 1 - h) + ", " + std::to_string(t) +
                     "] does not fit the series");
  WindowSegment seg;
  seg.anchor_t = t;
  seg.lookback = h;
  seg.batch = b;
  const int len = b + h;
  const int start = t - b + 1 - h;
  seg.data = Mat(frame.vars(), len);
  for (int r = 0; r < frame.vars(); ++r)
    for (int c = 0; c < len; ++c) seg.data(r, c) = frame.values(r, start + c);
  if (frame.has_timestamps())
    seg.timestamps.assign(frame.timestamps.begin() + start, frame.timestamps.begin() + start + len);
  return seg;
}

/// A segment standardized per variable over its own span. `scale` is the
/// denominator actually used (population std, floored at epsilon), retained
/// so the mapping is exactly invertible.
struct NormalizedSegment {
  Mat data;
  Vec mean, scale;
  double epsilon = 0.0;
  int anchor_t = 0, lookback = 0, batch = 0;
  std::vector<double> timestamps;

  int length() const { return data.cols; }
  int vars() const { return data.rows; }
};

inline NormalizedSegment instance_normalize(const WindowSegment& segment, double epsilon = 1e-5) {
  if (!(epsilon > 0.0)) throw BadRange("epsilon must be positive");
  NormalizedSegment out;
  out.data = segment.data;
  out.epsilon = epsilon;
  out.anchor_t = segment.anchor_t;
  out.lookback = segment.lookback;
  out.batch = segment.batch;
  out.timestamps = segment.timestamps;
  const int n = segment.data.rows, len = segment.data.cols;
  out.mean.resize(n);
  out.scale.resize(n);
  for (int r = 0; r < n; ++r) {
    const double* x = segment.data.row(r);
    double m = 0.0;
    for (int c = 0; c < len; ++c) m += x[c];
    m /= len;
    double var = 0.0;
    for (int c = 0; c < len; ++c) var += (x[c] - m) * (x[c] - m);
    double sd = std::sqrt(var / len);  // population std
    double scale = std::max(sd, epsilon);
    out.mean[r] = m;
    out.scale[r] = scale;
    double* y = out.data.row(r);
    for (int c = 0; c < len; ++c) y[c] = (x[c] - m) / scale;
  }
  return out;
}

/// Inverse of instance_normalize using the retained stats.
inline Mat denormalize(const NormalizedSegment& seg) {
  Mat out = seg.data;
  for (int r = 0; r < out.rows; ++r) {
    double* y = out.row(r);
    for (int c = 0; c < out.cols; ++c) y[c] = y[c] * seg.scale[r] + seg.mean[r];
  }
  return out;
}

/// Cyclical time encodings, one column per timestamp. Four rows when
/// timestamps are present (sin/cos of the hour-of-day and day-of-week
/// phases), zero rows otherwise.
struct AuxAttributes {
  Mat data;  // F x length
  int dim() const { return data.rows; }
};

inline AuxAttributes encode_time_attributes(const std::vector<double>& timestamps) {
  AuxAttributes aux;
  if (timestamps.empty()) return aux;
  constexpr double kDay = 86400.0;
  constexpr double kWeek = 604800.0;
  // Epoch origin is a Thursday; shift by four days so the week phase is zero
  // at Monday 00:00 UTC.
  constexpr double kMondayShift = 4.0 * kDay;
  constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
  const int len = static_cast<int>(timestamps.size());
  aux.data = Mat(4, len);
  for (int t = 0; t < len; ++t) {
    double hour_phase = kTwoPi * detail::floor_mod(timestamps[t], kDay) / kDay;
    double week_phase = kTwoPi * detail::floor_mod(timestamps[t] - kMondayShift, kWeek) / kWeek;
    aux.data(0, t) = std::sin(hour_phase);
    aux.data(1, t) = std::cos(hour_phase);
    aux.data(2, t) = std::sin(week_phase);
    aux.data(3, t) = std::cos(week_phase);
  }
  return aux;
}

/// Ground-truth prediction targets: target_t = 1 iff any label in [t+1, t+f]
/// is 1. Timestamps without a full look-ahead are Excluded; when
/// exclude_contaminated is set, timestamps whose current window [t-h, t]
/// already contains a labeled anomaly are Excluded as well, so the task stays
/// prediction rather than detection.
inline std::vector<Target> future_anomaly_targets(const SeriesFrame& frame, int f, int h,
                                                  bool exclude_contaminated) {
  if (!frame.has_labels()) throw MissingLabels("frame has no label column");
  if (f < 1) throw OutOfRange("look-forward must be at least 1");
  const int T = frame.length();
  // Prefix sums make each range query O(1); tests compare against a direct
  // O(T*f) scan.
  std::vector<long> prefix(T + 1, 0);
  for (int t = 0; t < T; ++t) prefix[t + 1] = prefix[t] + frame.labels[t];
  auto any_label = [&](int lo, int hi) {  // inclusive range, clamped
    lo = std::max(lo, 0);
    hi = std::min(hi, T - 1);
    if (lo > hi) return false;
    return prefix[hi + 1] - prefix[lo] > 0;
  };
  std::vector<Target> out(T, Target::Excluded);
  for (int t = 0; t < T; ++t) {
    if (t + f > T - 1) continue;  // tail rule: no full look-ahead
    if (exclude_contaminated && any_label(t - h, t)) continue;
    out[t] = any_label(t + 1, t + f) ? Target::Positive : Target::Negative;
  }
  return out;
}

}  // namespace igcl
