#pragma once

// Static SVG rendering of a score series: the score trace, the threshold
// line, shaded labeled-anomaly spans, and early-warning markers. Output is a
// deterministic function of the inputs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "igcl/scoring.hpp"

namespace igcl {

namespace plotdetail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace plotdetail

inline std::string render_score_svg(const ScoreSeries& scores, const std::vector<int>& labels,
                                    const std::vector<Warning>& warnings, int width = 960,
                                    int height = 320) {
  using plotdetail::num;
  const int T = scores.length();
  const double ml = 56, mr = 16, mt = 16, mb = 36;
  const double pw = width - ml - mr, ph = height - mt - mb;

  double lo = 0.0, hi = 1.0;
  bool any = false;
  for (int t = 0; t < T; ++t) {
    if (scores.excluded[t]) continue;
    if (!any) {
      lo = hi = scores.score[t];
      any = true;
    } else {
      lo = std::min(lo, scores.score[t]);
      hi = std::max(hi, scores.score[t]);
    }
  }
  if (std::isfinite(scores.delta)) {
    lo = std::min(lo, scores.delta);
    hi = std::max(hi, scores.delta);
  }
  if (!any && !std::isfinite(scores.delta)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto x_of = [&](double t) { return ml + (T > 1 ? t / (T - 1.0) : 0.5) * pw; };
  auto y_of = [&](double v) { return mt + (1.0 - (v - lo) / (hi - lo)) * ph; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
         "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " + std::to_string(width) +
         " " + std::to_string(height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // shaded labeled-anomaly spans
  for (size_t t = 0; t < labels.size() && t < static_cast<size_t>(T);) {
    if (labels[t] == 1) {
      size_t e = t;
      while (e < labels.size() && e < static_cast<size_t>(T) && labels[e] == 1) ++e;
      svg += "<rect x=\"" + num(x_of(static_cast<double>(t))) + "\" y=\"" + num(mt) + "\" width=\"" +
             num(std::max(1.0, x_of(static_cast<double>(e - 1)) - x_of(static_cast<double>(t)))) +
             "\" height=\"" + num(ph) + "\" fill=\"#f4c7c3\" opacity=\"0.7\"/>\n";
      t = e;
    } else {
      ++t;
    }
  }

  // axes
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(ml) + "\" y2=\"" +
         num(mt + ph) + "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(mt + ph) + "\" x2=\"" + num(ml + pw) +
         "\" y2=\"" + num(mt + ph) + "\" stroke=\"#444\" stroke-width=\"1\"/>\n";
  char buf[96];
  std::snprintf(buf, sizeof buf,
                "<text x=\"4\" y=\"%s\" font-size=\"11\" font-family=\"sans-serif\">%.3g</text>\n",
                num(mt + 10).c_str(), hi);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"4\" y=\"%s\" font-size=\"11\" font-family=\"sans-serif\">%.3g</text>\n",
                num(mt + ph).c_str(), lo);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%s\" y=\"%d\" font-size=\"11\" font-family=\"sans-serif\">t</text>\n",
                num(ml + pw - 8).c_str(), height - 8);
  svg += buf;

  // score trace, broken at excluded gaps
  std::string points;
  bool open = false;
  for (int t = 0; t < T; ++t) {
    if (scores.excluded[t]) {
      if (open) {
        svg += "<polyline fill=\"none\" stroke=\"#1a63a8\" stroke-width=\"1.2\" points=\"" + points +
               "\"/>\n";
        points.clear();
        open = false;
      }
      continue;
    }
    points += num(x_of(t)) + "," + num(y_of(scores.score[t])) + " ";
    open = true;
  }
  if (open)
    svg += "<polyline fill=\"none\" stroke=\"#1a63a8\" stroke-width=\"1.2\" points=\"" + points +
           "\"/>\n";

  // threshold line
  if (std::isfinite(scores.delta)) {
    svg += "<line x1=\"" + num(ml) + "\" y1=\"" + num(y_of(scores.delta)) + "\" x2=\"" +
           num(ml + pw) + "\" y2=\"" + num(y_of(scores.delta)) +
           "\" stroke=\"#c0392b\" stroke-width=\"1\" stroke-dasharray=\"5,4\"/>\n";
  }

  // warning markers
  for (const Warning& w : warnings) {
    if (w.first_flag < 0 || w.first_flag >= T || scores.excluded[w.first_flag]) continue;
    const double x = x_of(w.first_flag), y = y_of(scores.score[w.first_flag]);
    svg += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) +
           "\" r=\"4\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\"/>\n";
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace igcl
