#include "ctxjudge/metrics.h"

#include <cmath>
#include <limits>
#include <tuple>

#include "ctxjudge/error.h"
#include "ctxjudge/text.h"

namespace ctxjudge {

using nlohmann::json;

void to_json(json& j, const TrialResult& r) {
  j = json{{"index", r.index},
           {"kind", r.kind == TargetKind::kPair ? "pair" : "item"},
           {"dataset", r.dataset},
           {"suite", r.suite_id},
           {"phenomenon", r.phenomenon},
           {"target", r.target_id},
           {"strategy", r.strategy_name()},
           {"checkpoint", r.checkpoint},
           {"prefix_tokens", r.prefix_tokens},
           {"correct", r.correct}};
  if (r.source_suite) j["source_suite"] = *r.source_suite;
  if (r.kind == TargetKind::kPair) {
    j["loglik_acceptable"] = r.loglik_acceptable;
    j["loglik_unacceptable"] = r.loglik_unacceptable;
  } else {
    json tables = json::object();
    for (const auto& [cond, regions] : r.tables) {
      json t = json::object();
      for (const auto& [num, value] : regions) t[std::to_string(num)] = value;
      tables[cond] = t;
    }
    j["tables"] = tables;
  }
}

void from_json(const json& j, TrialResult& r) {
  r.index = j.at("index").get<std::size_t>();
  r.kind = j.at("kind").get<std::string>() == "pair" ? TargetKind::kPair
                                                     : TargetKind::kItem;
  r.dataset = j.at("dataset").get<std::string>();
  r.suite_id = j.at("suite").get<std::string>();
  r.phenomenon = j.at("phenomenon").get<std::string>();
  r.target_id = j.at("target").get<std::string>();
  const auto strategy = j.at("strategy").get<std::string>();
  if (strategy == "baseline")
    r.strategy.reset();
  else
    r.strategy = PrefixStrategy::parse(strategy);
  r.source_suite.reset();
  if (j.contains("source_suite")) r.source_suite = j["source_suite"].get<std::string>();
  r.checkpoint = j.at("checkpoint").get<int>();
  r.prefix_tokens = j.at("prefix_tokens").get<int>();
  r.correct = j.at("correct").get<bool>();
  r.tables.clear();
  if (r.kind == TargetKind::kPair) {
    r.loglik_acceptable = j.at("loglik_acceptable").get<double>();
    r.loglik_unacceptable = j.at("loglik_unacceptable").get<double>();
  } else {
    for (const auto& [cond, regions] : j.at("tables").items())
      for (const auto& [num, value] : regions.items())
        r.tables[cond][std::stoi(num)] = value.get<double>();
  }
}

namespace {

void require_finite(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw DataError("non-finite log-likelihood");
}

}  // namespace

int pair_accuracy(double p_acc, double p_unacc) {
  require_finite(p_acc, p_unacc);
  return p_acc > p_unacc ? 1 : 0;
}

int item_accuracy(const ConditionedItem& item, const ConditionTables& tables) {
  prediction::SurprisalTable table;
  for (const auto& [cond, regions] : tables)
    for (const auto& [num, value] : regions) table[{num, cond}] = value;
  return prediction::evaluate(item.formula, table) ? 1 : 0;
}

double baselined_accuracy(std::span<const int> prefixed, std::span<const int> baseline) {
  if (prefixed.empty() || baseline.empty())
    throw DataError("baselined accuracy needs non-empty lists");
  if (prefixed.size() != baseline.size())
    throw DataError("baselined accuracy: length mismatch (" +
                    std::to_string(prefixed.size()) + " vs " +
                    std::to_string(baseline.size()) + ")");
  long sp = 0;
  long sb = 0;
  for (int v : prefixed) sp += v;
  for (int v : baseline) sb += v;
  const double n = static_cast<double>(prefixed.size());
  return static_cast<double>(sp) / n - static_cast<double>(sb) / n;
}

double margin(double p_acc, double p_unacc) {
  require_finite(p_acc, p_unacc);
  return p_acc - p_unacc;
}

std::vector<AggregateCell> aggregate(std::span<const TrialResult> results) {
  using Key = std::tuple<std::string, std::string, std::string, int>;
  std::map<Key, std::vector<const TrialResult*>> groups;
  // suite -> target -> baseline correctness
  std::map<std::string, std::map<std::string, int>> baseline;
  for (const auto& r : results) {
    groups[{r.suite_id, r.strategy_name(), r.source_suite.value_or(""), r.checkpoint}]
        .push_back(&r);
    if (!r.strategy) baseline[r.suite_id][r.target_id] = r.correct ? 1 : 0;
  }

  std::vector<AggregateCell> cells;
  cells.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    const auto& first = *members.front();
    AggregateCell cell;
    cell.suite_id = first.suite_id;
    cell.phenomenon = first.phenomenon;
    cell.strategy = first.strategy;
    cell.source_suite = first.source_suite;
    cell.checkpoint = first.checkpoint;
    cell.n = members.size();

    const auto b = baseline.find(first.suite_id);
    if (b == baseline.end())
      throw DataError("no baseline results for suite '" + first.suite_id + "'");
    std::vector<int> prefixed;
    std::vector<int> base;
    double margin_sum = 0.0;
    std::size_t margin_n = 0;
    double tokens = 0.0;
    for (const auto* r : members) {
      const auto t = b->second.find(r->target_id);
      if (t == b->second.end())
        throw DataError("no baseline result for target '" + r->suite_id + "/" +
                        r->target_id + "'");
      prefixed.push_back(r->correct ? 1 : 0);
      base.push_back(t->second);
      cell.correct += r->correct ? 1 : 0;
      tokens += r->prefix_tokens;
      if (r->kind == TargetKind::kPair) {
        margin_sum += margin(r->loglik_acceptable, r->loglik_unacceptable);
        ++margin_n;
      }
    }
    const double n = static_cast<double>(cell.n);
    cell.accuracy = static_cast<double>(cell.correct) / n;
    cell.baselined_accuracy = baselined_accuracy(prefixed, base);
    cell.mean_margin = margin_n > 0 ? margin_sum / static_cast<double>(margin_n)
                                    : std::numeric_limits<double>::quiet_NaN();
    cell.mean_prefix_tokens = tokens / n;
    cells.push_back(std::move(cell));
  }
  return cells;
}

std::string cells_to_csv(std::span<const AggregateCell> cells) {
  std::string out =
      "suite,phenomenon,strategy_domain,strategy_polarity,checkpoint,n,accuracy,"
      "baselined_accuracy,mean_margin,mean_actual_prefix_tokens\n";
  for (const auto& c : cells) {
    if (c.source_suite) continue;
    const std::string domain = c.strategy ? to_string(c.strategy->domain) : "none";
    const std::string polarity =
        c.strategy ? to_string(c.strategy->polarity) : "not_applicable";
    out += c.suite_id + "," + c.phenomenon + "," + domain + "," + polarity + "," +
           std::to_string(c.checkpoint) + "," + std::to_string(c.n) + "," +
           format_double(c.accuracy) + "," + format_double(c.baselined_accuracy) +
           "," + (std::isnan(c.mean_margin) ? "" : format_double(c.mean_margin)) +
           "," + format_double(c.mean_prefix_tokens) + "\n";
  }
  return out;
}

}  // namespace ctxjudge
