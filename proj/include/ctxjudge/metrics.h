#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxjudge/context.h"
#include "ctxjudge/dataset.h"

namespace ctxjudge {

// Region surprisals for each condition of an item: condition -> region -> value.
using ConditionTables = std::map<std::string, std::map<int, double>>;

struct TrialResult {
  std::size_t index = 0;  // position in the trial manifest
  TargetKind kind = TargetKind::kPair;
  std::string dataset;
  std::string suite_id;
  std::string phenomenon;
  std::string target_id;
  std::optional<PrefixStrategy> strategy;  // empty for baseline trials
  std::optional<std::string> source_suite;
  int checkpoint = 0;
  int prefix_tokens = 0;
  // Pair targets.
  double loglik_acceptable = 0.0;
  double loglik_unacceptable = 0.0;
  // Item targets.
  ConditionTables tables;
  bool correct = false;

  std::string strategy_name() const {
    return strategy ? strategy->name() : std::string("baseline");
  }
  bool operator==(const TrialResult&) const = default;
};

void to_json(nlohmann::json& j, const TrialResult& r);
void from_json(const nlohmann::json& j, TrialResult& r);

// 1 iff p_acc > p_unacc. Ties are incorrect. Throws DataError on non-finite
// input.
int pair_accuracy(double p_acc, double p_unacc);

// 1 iff the item's prediction holds on the surprisal tables.
int item_accuracy(const ConditionedItem& item, const ConditionTables& tables);

// mean(prefixed) - mean(baseline); both lists cover the same items in the
// same order.
double baselined_accuracy(std::span<const int> prefixed, std::span<const int> baseline);

// p_acc - p_unacc on log-likelihood preferences.
double margin(double p_acc, double p_unacc);

struct AggregateCell {
  std::string suite_id;
  std::string phenomenon;
  std::optional<PrefixStrategy> strategy;
  std::optional<std::string> source_suite;
  int checkpoint = 0;
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double baselined_accuracy = 0.0;
  double mean_margin = 0.0;  // NaN when the cell holds no pair targets
  double mean_prefix_tokens = 0.0;

  std::string strategy_name() const {
    return strategy ? strategy->name() : std::string("baseline");
  }
};

// One cell per (suite, strategy, source suite, checkpoint), sorted by that
// key. Baselined accuracy is taken against the same targets' baseline trials.
// Throws DataError when a suite has no baseline results.
std::vector<AggregateCell> aggregate(std::span<const TrialResult> results);

// suite, phenomenon, strategy_domain, strategy_polarity, checkpoint, n,
// accuracy, baselined_accuracy, mean_margin, mean_actual_prefix_tokens.
// Cells with a source suite are skipped.
std::string cells_to_csv(std::span<const AggregateCell> cells);

}  // namespace ctxjudge
