#include "ctxjudge/analysis.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "ctxjudge/error.h"
#include "ctxjudge/text.h"

namespace ctxjudge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string field(double v) { return std::isnan(v) ? "" : format_double(v); }

double parse_field(const std::string& s) {
  if (s.empty()) return kNaN;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw DataError("bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw DataError("bad number '" + s + "'");
  }
}

struct Accum {
  std::vector<double> accuracy;
  std::vector<double> baselined;
  std::vector<double> margin;
  std::set<std::string> suites;
  std::size_t n = 0;
};

stats::Interval interval(const std::vector<double>& values, const BootstrapOptions& b,
                         const std::string& key) {
  if (values.empty()) return {kNaN, kNaN};
  return stats::bootstrap_ci(values, b.resamples, b.level, mix_seed(b.seed, key));
}

double mean_or_nan(const std::vector<double>& v) {
  return v.empty() ? kNaN : stats::mean(v);
}

}  // namespace

std::string to_string(Averaging a) { return a == Averaging::kMacro ? "macro" : "micro"; }

Averaging parse_averaging(std::string_view s) {
  if (s == "macro") return Averaging::kMacro;
  if (s == "micro") return Averaging::kMicro;
  throw ConfigError("averaging must be macro or micro, got '" + std::string(s) + "'");
}

std::vector<SummaryRow> summarize(std::span<const TrialResult> results,
                                  const std::string& dataset, Averaging averaging,
                                  const BootstrapOptions& bootstrap) {
  std::vector<TrialResult> kept;
  for (const auto& r : results)
    if (!r.source_suite) kept.push_back(r);
  if (kept.empty()) return {};

  std::map<std::string, std::map<std::string, const TrialResult*>> baseline;
  std::set<std::string> strategies;
  for (const auto& r : kept) {
    if (!r.strategy)
      baseline[r.suite_id][r.target_id] = &r;
    else
      strategies.insert(r.strategy->name());
  }

  // (strategy name, checkpoint); "baseline" at 0 and every strategy at 0
  // draw on the baseline trials.
  std::map<std::pair<std::string, int>, Accum> groups;
  std::map<std::pair<std::string, int>, std::optional<PrefixStrategy>> strategy_of;

  if (averaging == Averaging::kMicro) {
    auto add = [&](const std::string& name, int checkpoint,
                   const std::optional<PrefixStrategy>& s, const TrialResult& r,
                   const TrialResult& base) {
      auto& g = groups[{name, checkpoint}];
      strategy_of[{name, checkpoint}] = s;
      g.accuracy.push_back(r.correct ? 1.0 : 0.0);
      g.baselined.push_back((r.correct ? 1.0 : 0.0) - (base.correct ? 1.0 : 0.0));
      if (r.kind == TargetKind::kPair)
        g.margin.push_back(margin(r.loglik_acceptable, r.loglik_unacceptable));
      g.suites.insert(r.suite_id);
      ++g.n;
    };
    for (const auto& r : kept) {
      const auto suite = baseline.find(r.suite_id);
      if (suite == baseline.end())
        throw DataError("no baseline results for suite '" + r.suite_id + "'");
      const auto base = suite->second.find(r.target_id);
      if (base == suite->second.end())
        throw DataError("no baseline result for target '" + r.suite_id + "/" +
                        r.target_id + "'");
      if (!r.strategy) {
        add("baseline", 0, std::nullopt, r, r);
        for (const auto& name : strategies)
          add(name, 0, PrefixStrategy::parse(name), r, r);
      } else {
        add(r.strategy->name(), r.checkpoint, r.strategy, r, *base->second);
      }
    }
  } else {
    const auto cells = aggregate(kept);
    auto add = [&](const std::string& name, int checkpoint,
                   const std::optional<PrefixStrategy>& s, const AggregateCell& c,
                   bool as_baseline) {
      auto& g = groups[{name, checkpoint}];
      strategy_of[{name, checkpoint}] = s;
      g.accuracy.push_back(c.accuracy);
      g.baselined.push_back(as_baseline ? 0.0 : c.baselined_accuracy);
      if (!std::isnan(c.mean_margin)) g.margin.push_back(c.mean_margin);
      g.suites.insert(c.suite_id);
      g.n += c.n;
    };
    for (const auto& c : cells) {
      if (!c.strategy) {
        add("baseline", 0, std::nullopt, c, true);
        for (const auto& name : strategies)
          add(name, 0, PrefixStrategy::parse(name), c, true);
      } else {
        add(c.strategy->name(), c.checkpoint, c.strategy, c, false);
      }
    }
  }

  std::vector<SummaryRow> rows;
  for (const auto& [key, g] : groups) {
    SummaryRow row;
    row.dataset = dataset;
    row.averaging = averaging;
    row.strategy = strategy_of[key];
    row.checkpoint = key.second;
    row.suites = g.suites.size();
    row.n = g.n;
    const std::string tag = key.first + "@" + std::to_string(key.second);
    row.accuracy = stats::mean(g.accuracy);
    row.accuracy_ci = interval(g.accuracy, bootstrap, tag + "/accuracy");
    row.baselined_accuracy = stats::mean(g.baselined);
    row.baselined_ci = interval(g.baselined, bootstrap, tag + "/baselined");
    row.mean_margin = mean_or_nan(g.margin);
    row.margin_ci = interval(g.margin, bootstrap, tag + "/margin");
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

const char* kSummaryHeader =
    "dataset,averaging,strategy_domain,strategy_polarity,checkpoint,suites,n,"
    "accuracy,accuracy_lo,accuracy_hi,baselined_accuracy,baselined_lo,"
    "baselined_hi,mean_margin,margin_lo,margin_hi";

}  // namespace

std::string summary_to_csv(std::span<const SummaryRow> rows) {
  std::string out = std::string(kSummaryHeader) + "\n";
  for (const auto& r : rows) {
    const std::string domain = r.strategy ? to_string(r.strategy->domain) : "none";
    const std::string polarity =
        r.strategy ? to_string(r.strategy->polarity) : "not_applicable";
    out += r.dataset + "," + to_string(r.averaging) + "," + domain + "," + polarity +
           "," + std::to_string(r.checkpoint) + "," + std::to_string(r.suites) + "," +
           std::to_string(r.n) + "," + field(r.accuracy) + "," +
           field(r.accuracy_ci.lo) + "," + field(r.accuracy_ci.hi) + "," +
           field(r.baselined_accuracy) + "," + field(r.baselined_ci.lo) + "," +
           field(r.baselined_ci.hi) + "," + field(r.mean_margin) + "," +
           field(r.margin_ci.lo) + "," + field(r.margin_ci.hi) + "\n";
  }
  return out;
}

std::vector<SummaryRow> parse_summary_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != kSummaryHeader)
    throw DataError("summary CSV: unexpected header");
  std::vector<SummaryRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 16)
      throw DataError("summary CSV line " + std::to_string(line_no) + ": expected 16 fields");
    SummaryRow r;
    r.dataset = f[0];
    r.averaging = parse_averaging(f[1]);
    if (f[2] != "none") r.strategy = PrefixStrategy{parse_domain(f[2]), parse_polarity(f[3])};
    r.checkpoint = static_cast<int>(parse_field(f[4]));
    r.suites = static_cast<std::size_t>(parse_field(f[5]));
    r.n = static_cast<std::size_t>(parse_field(f[6]));
    r.accuracy = parse_field(f[7]);
    r.accuracy_ci = {parse_field(f[8]), parse_field(f[9])};
    r.baselined_accuracy = parse_field(f[10]);
    r.baselined_ci = {parse_field(f[11]), parse_field(f[12])};
    r.mean_margin = parse_field(f[13]);
    r.margin_ci = {parse_field(f[14]), parse_field(f[15])};
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string margins_to_csv(std::span<const TrialResult> results) {
  std::string out =
      "index,suite,target,strategy_domain,strategy_polarity,checkpoint,prefix_tokens,"
      "margin\n";
  for (const auto& r : results) {
    if (r.kind != TargetKind::kPair || r.source_suite) continue;
    const std::string domain = r.strategy ? to_string(r.strategy->domain) : "none";
    const std::string polarity =
        r.strategy ? to_string(r.strategy->polarity) : "not_applicable";
    out += std::to_string(r.index) + "," + r.suite_id + "," + r.target_id + "," +
           domain + "," + polarity + "," + std::to_string(r.checkpoint) + "," +
           std::to_string(r.prefix_tokens) + "," +
           format_double(margin(r.loglik_acceptable, r.loglik_unacceptable)) + "\n";
  }
  return out;
}

std::vector<stats::TrialRow> regression_rows(std::span<const TrialResult> results) {
  std::vector<stats::TrialRow> rows;
  for (const auto& r : results) {
    if (!r.strategy || r.source_suite || r.strategy->domain == Domain::kControl) continue;
    if (r.prefix_tokens < 1) continue;
    stats::TrialRow row;
    row.correct = r.correct ? 1 : 0;
    row.prefix_tokens = r.prefix_tokens;
    row.polarity = r.strategy->polarity == Polarity::kAcceptable ? 1 : -1;
    row.domain = r.strategy->domain == Domain::kInDomain ? 1 : -1;
    row.suite = r.suite_id;
    rows.push_back(std::move(row));
  }
  return rows;
}

stats::RegressionSpec regression_spec_for(std::span<const stats::TrialRow> rows,
                                          double ridge_lambda) {
  std::set<int> polarities;
  std::set<int> domains;
  std::set<std::pair<int, int>> cells;
  std::set<std::string> suites;
  for (const auto& r : rows) {
    polarities.insert(r.polarity);
    domains.insert(r.domain);
    cells.insert({r.polarity, r.domain});
    suites.insert(r.suite);
  }
  const bool crossed = cells.size() == 4;
  std::vector<unsigned> factors{stats::kLogLength};
  if (polarities.size() > 1) factors.push_back(stats::kPolarity);
  if (domains.size() > 1) factors.push_back(stats::kDomain);
  stats::RegressionSpec spec;
  spec.ridge_lambda = ridge_lambda;
  spec.suite_intercepts = suites.size() > 1;
  for (unsigned mask = 1; mask < (1u << factors.size()); ++mask) {
    unsigned term = 0;
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (mask & (1u << i)) term |= factors[i];
    const bool both = (term & stats::kPolarity) && (term & stats::kDomain);
    if (both && !crossed) continue;
    spec.terms.push_back(term);
  }
  std::sort(spec.terms.begin(), spec.terms.end(), [](unsigned a, unsigned b) {
    const int pa = std::popcount(a);
    const int pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  return spec;
}

CrossPrimeMatrix cross_prime_matrix(std::span<const TrialResult> results,
                                    std::span<const std::string> suites) {
  CrossPrimeMatrix m;
  m.suites.assign(suites.begin(), suites.end());
  std::map<std::string, std::pair<double, std::size_t>> baseline;
  std::map<std::pair<std::string, std::string>, std::pair<double, std::size_t>> primed;
  for (const auto& r : results) {
    if (!r.strategy) {
      auto& b = baseline[r.suite_id];
      b.first += r.correct ? 1.0 : 0.0;
      ++b.second;
    } else if (r.source_suite) {
      auto& p = primed[{r.suite_id, *r.source_suite}];
      p.first += r.correct ? 1.0 : 0.0;
      ++p.second;
    }
  }
  for (const auto& [key, p] : primed) {
    const auto b = baseline.find(key.first);
    if (b == baseline.end())
      throw DataError("no baseline results for suite '" + key.first + "'");
    if (b->second.second != p.second)
      throw DataError("cross-prime cell " + key.first + "<-" + key.second +
                      " covers a different number of targets than the baseline");
    const double n = static_cast<double>(p.second);
    m.improvement[key] = 100.0 * (p.first / n - b->second.first / n);
    m.n[key] = p.second;
  }
  return m;
}

std::string cross_prime_to_csv(const CrossPrimeMatrix& m,
                               const std::string& diagonal_marker) {
  std::string out = "target_suite";
  for (const auto& s : m.suites) out += "," + s;
  out += "\n";
  for (const auto& target : m.suites) {
    out += target;
    for (const auto& source : m.suites) {
      out += ",";
      if (source == target) {
        out += diagonal_marker;
        continue;
      }
      const auto it = m.improvement.find({target, source});
      if (it != m.improvement.end()) out += format_double(it->second);
    }
    out += "\n";
  }
  return out;
}

}  // namespace ctxjudge
