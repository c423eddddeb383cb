#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxjudge/context.h"
#include "ctxjudge/metrics.h"
#include "ctxjudge/stats.h"

namespace ctxjudge {

enum class Averaging { kMacro, kMicro };
std::string to_string(Averaging a);
Averaging parse_averaging(std::string_view s);

// One row per (strategy, checkpoint) across all suites of a dataset. Every
// strategy also gets a checkpoint-0 row built from the baseline trials.
// Margin fields are NaN when no pair targets contribute.
struct SummaryRow {
  std::string dataset;
  Averaging averaging = Averaging::kMacro;
  std::optional<PrefixStrategy> strategy;  // empty: the baseline row
  int checkpoint = 0;
  std::size_t suites = 0;
  std::size_t n = 0;
  double accuracy = 0.0;
  stats::Interval accuracy_ci;
  double baselined_accuracy = 0.0;
  stats::Interval baselined_ci;
  double mean_margin = 0.0;
  stats::Interval margin_ci;

  std::string strategy_name() const {
    return strategy ? strategy->name() : std::string("baseline");
  }
};

struct BootstrapOptions {
  int resamples = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

// Macro averaging bootstraps over per-suite cell values, micro over trials.
// Single-source trials are ignored.
std::vector<SummaryRow> summarize(std::span<const TrialResult> results,
                                  const std::string& dataset, Averaging averaging,
                                  const BootstrapOptions& bootstrap);

std::string summary_to_csv(std::span<const SummaryRow> rows);
// Inverse of summary_to_csv. Throws DataError on a malformed file.
std::vector<SummaryRow> parse_summary_csv(const std::string& csv);

// Per-trial margins of pair targets:
// index, suite, target, strategy_domain, strategy_polarity, checkpoint,
// prefix_tokens, margin.
std::string margins_to_csv(std::span<const TrialResult> results);

// Prefixed in-domain and out-of-domain trials with a positive prefix length.
std::vector<stats::TrialRow> regression_rows(std::span<const TrialResult> results);

// Full factorial over the factors that vary in `rows` (polarity and domain
// are dropped when constant), with suite intercepts. Terms crossing polarity
// with domain are kept only when all four polarity/domain cells occur.
stats::RegressionSpec regression_spec_for(std::span<const stats::TrialRow> rows,
                                          double ridge_lambda);

// Relative improvement in percentage points of each (target, source) suite
// pair over the target's baseline accuracy. Diagonal entries are absent.
struct CrossPrimeMatrix {
  std::vector<std::string> suites;  // dataset order
  std::map<std::pair<std::string, std::string>, double> improvement;
  std::map<std::pair<std::string, std::string>, std::size_t> n;
};

CrossPrimeMatrix cross_prime_matrix(std::span<const TrialResult> results,
                                    std::span<const std::string> suites);

// Rows are target suites, columns source suites. The diagonal is written as
// `diagonal_marker`.
std::string cross_prime_to_csv(const CrossPrimeMatrix& m,
                               const std::string& diagonal_marker);

}  // namespace ctxjudge
