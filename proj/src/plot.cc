#include "ctxjudge/plot.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

namespace ctxjudge {

namespace {

constexpr double kWidth = 720;
constexpr double kHeight = 440;
constexpr double kLeft = 70;
constexpr double kRight = 200;
constexpr double kTop = 40;
constexpr double kBottom = 60;

constexpr std::array<const char*, 8> kPalette = {
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) { return fmt::format("{:.2f}", v); }

std::string tick_label(double v) {
  if (std::abs(v - std::round(v)) < 1e-9) return fmt::format("{:.0f}", v);
  return fmt::format("{:.3g}", v);
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  auto tx = [&](double x) { return spec.log_x ? std::log1p(std::max(x, 0.0)) : x; };

  std::set<double> xs;
  double ymin = std::numeric_limits<double>::infinity();
  double ymax = -std::numeric_limits<double>::infinity();
  for (const auto& s : spec.series) {
    for (const auto& p : s.points) {
      xs.insert(p.x);
      for (double v : {p.y, p.lo, p.hi}) {
        if (std::isnan(v)) continue;
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  }
  if (xs.empty()) {
    ymin = 0.0;
    ymax = 1.0;
    xs.insert(0.0);
  }
  if (ymax - ymin < 1e-12) {
    ymin -= 0.5;
    ymax += 0.5;
  } else {
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
  }
  double xmin = tx(*xs.begin());
  double xmax = tx(*xs.rbegin());
  if (xmax - xmin < 1e-12) {
    xmin -= 1.0;
    xmax += 1.0;
  }

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * plot_h; };

  std::string out;
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight, kWidth, kHeight);
  out += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  out += fmt::format("<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     num(kLeft + plot_w / 2), escape(spec.title));

  // Axes and ticks.
  out += fmt::format("<g stroke=\"#333\" stroke-width=\"1\">\n");
  out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", num(kLeft),
                     num(kTop + plot_h), num(kLeft + plot_w), num(kTop + plot_h));
  out += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"/>\n", num(kLeft),
                     num(kTop), num(kLeft), num(kTop + plot_h));
  out += "</g>\n";
  for (double x : xs) {
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333\"/>"
        "<text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
        num(px(x)), num(kTop + plot_h), num(kTop + plot_h + 5), num(kTop + plot_h + 20),
        tick_label(x));
  }
  for (int i = 0; i <= 4; ++i) {
    const double y = ymin + (ymax - ymin) * i / 4.0;
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#ddd\"/>"
        "<text x=\"{3}\" y=\"{4}\" text-anchor=\"end\">{5}</text>\n",
        num(kLeft), num(py(y)), num(kLeft + plot_w), num(kLeft - 6), num(py(y) + 4),
        fmt::format("{:.3f}", y));
  }
  if (ymin < 0.0 && ymax > 0.0)
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#888\" "
        "stroke-dasharray=\"4 3\"/>\n",
        num(kLeft), num(py(0.0)), num(kLeft + plot_w));
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                     num(kLeft + plot_w / 2), num(kHeight - 15), escape(spec.x_label));
  out += fmt::format(
      "<text x=\"18\" y=\"{0}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0})\">{1}</text>\n",
      num(kTop + plot_h / 2), escape(spec.y_label));

  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& s = spec.series[i];
    const char* color = kPalette[i % kPalette.size()];
    std::vector<const PlotPoint*> banded;
    for (const auto& p : s.points)
      if (!std::isnan(p.lo) && !std::isnan(p.hi)) banded.push_back(&p);
    if (!banded.empty()) {
      std::string pts;
      for (const auto* p : banded) pts += num(px(p->x)) + "," + num(py(p->hi)) + " ";
      for (auto it = banded.rbegin(); it != banded.rend(); ++it)
        pts += num(px((*it)->x)) + "," + num(py((*it)->lo)) + " ";
      pts.pop_back();
      out += fmt::format(
          "<polygon class=\"band\" points=\"{}\" fill=\"{}\" fill-opacity=\"0.18\" "
          "stroke=\"none\"/>\n",
          pts, color);
    }
    if (s.points.size() > 1) {
      std::string pts;
      for (const auto& p : s.points) pts += num(px(p.x)) + "," + num(py(p.y)) + " ";
      pts.pop_back();
      out += fmt::format(
          "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", pts,
          color);
    }
    for (const auto& p : s.points)
      out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n", num(px(p.x)),
                         num(py(p.y)), color);
    const double ly = kTop + 10 + 20.0 * static_cast<double>(i);
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>"
        "<text x=\"{4}\" y=\"{5}\">{6}</text>\n",
        num(kLeft + plot_w + 15), num(ly), num(kLeft + plot_w + 35), color,
        num(kLeft + plot_w + 40), num(ly + 4), escape(s.name));
  }
  out += "</svg>\n";
  return out;
}

std::string to_string(PlotMetric m) {
  switch (m) {
    case PlotMetric::kAccuracy: return "accuracy";
    case PlotMetric::kBaselinedAccuracy: return "baselined_accuracy";
    case PlotMetric::kMargin: return "margin";
  }
  return "?";
}

PlotSpec summary_plot(std::span<const SummaryRow> rows, const std::string& dataset,
                      PlotMetric metric, bool log_x) {
  PlotSpec spec;
  const std::string averaging = rows.empty() ? "" : to_string(rows.front().averaging);
  spec.log_x = log_x;
  spec.x_label = log_x ? "prefix length (tokens, log scale)" : "prefix length (tokens)";
  switch (metric) {
    case PlotMetric::kAccuracy: spec.y_label = "accuracy"; break;
    case PlotMetric::kBaselinedAccuracy: spec.y_label = "baselined accuracy"; break;
    case PlotMetric::kMargin: spec.y_label = "mean margin"; break;
  }
  spec.title = dataset + ": " + spec.y_label + " (" + averaging + " average)";

  std::map<std::string, PlotSeries> by_strategy;
  for (const auto& r : rows) {
    if (!r.strategy || r.dataset != dataset) continue;
    PlotPoint p;
    p.x = r.checkpoint;
    switch (metric) {
      case PlotMetric::kAccuracy:
        p.y = r.accuracy;
        p.lo = r.accuracy_ci.lo;
        p.hi = r.accuracy_ci.hi;
        break;
      case PlotMetric::kBaselinedAccuracy:
        p.y = r.baselined_accuracy;
        p.lo = r.baselined_ci.lo;
        p.hi = r.baselined_ci.hi;
        break;
      case PlotMetric::kMargin:
        p.y = r.mean_margin;
        p.lo = r.margin_ci.lo;
        p.hi = r.margin_ci.hi;
        break;
    }
    if (std::isnan(p.y)) continue;
    auto& s = by_strategy[r.strategy->name()];
    s.name = r.strategy->name();
    s.points.push_back(p);
  }
  for (auto& [name, s] : by_strategy) {
    std::sort(s.points.begin(), s.points.end(),
              [](const PlotPoint& a, const PlotPoint& b) { return a.x < b.x; });
    spec.series.push_back(std::move(s));
  }
  return spec;
}

}  // namespace ctxjudge
