#pragma once

#include <span>
#include <string>
#include <vector>

#include "ctxjudge/analysis.h"

namespace ctxjudge {

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  double lo = 0.0;  // band; NaN for none
  double hi = 0.0;
};

struct PlotSeries {
  std::string name;
  std::vector<PlotPoint> points;  // ascending x
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;  // x is drawn at log(1 + x)
  std::vector<PlotSeries> series;
};

// Self-contained SVG. Output depends only on the spec.
std::string render_svg(const PlotSpec& spec);

enum class PlotMetric { kAccuracy, kBaselinedAccuracy, kMargin };
std::string to_string(PlotMetric m);

// One series per strategy (the baseline row is skipped); rows with a NaN
// value for the metric are dropped.
PlotSpec summary_plot(std::span<const SummaryRow> rows, const std::string& dataset,
                      PlotMetric metric, bool log_x);

}  // namespace ctxjudge
