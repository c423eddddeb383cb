#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctxjudge/dataset.h"

namespace ctxjudge {

enum class Domain { kInDomain, kOutOfDomain, kControl };
enum class Polarity { kAcceptable, kUnacceptable, kNotApplicable };

std::string to_string(Domain d);
std::string to_string(Polarity p);
Domain parse_domain(std::string_view s);
Polarity parse_polarity(std::string_view s);

struct PrefixStrategy {
  Domain domain = Domain::kInDomain;
  Polarity polarity = Polarity::kAcceptable;

  // "in_domain:acceptable", "control", ...
  std::string name() const;
  static PrefixStrategy parse(std::string_view text);
  // Throws ConfigError unless control <=> not_applicable.
  void validate() const;

  bool operator==(const PrefixStrategy&) const = default;
};

struct LengthGrid {
  std::vector<int> checkpoints{0, 50, 100, 200, 400, 700, 1000};
  int budget_cap = 1000;

  // Ascending, unique, contains 0, max <= budget_cap.
  void validate() const;
};

struct Prefix {
  std::string text;
  std::vector<std::string> sentence_ids;
  // Measured length of `text` under the active token counter.
  int token_length = 0;
  // Nominal checkpoint; for fixed-count prefixes this is the sentence count.
  int checkpoint = 0;
  // The pool ran out before the checkpoint was reached.
  bool underfilled = false;

  bool operator==(const Prefix&) const = default;
};

enum class TargetKind { kPair, kItem };

struct TargetRef {
  TargetKind kind = TargetKind::kPair;
  std::string suite_id;
  std::string target_id;  // pair id, or decimal item id

  std::string key() const { return suite_id + "/" + target_id; }
  bool operator==(const TargetRef&) const = default;
};

struct TrialSpec {
  std::string dataset;
  TargetRef target;
  // Empty for the no-prefix baseline.
  std::optional<PrefixStrategy> strategy;
  // Set for single-source trials (cross-priming and phenomenon recipes).
  std::optional<std::string> source_suite;
  Prefix prefix;
  std::uint64_t seed = 0;

  bool is_baseline() const { return !strategy.has_value(); }
  std::string strategy_name() const {
    return strategy ? strategy->name() : std::string("baseline");
  }
  bool operator==(const TrialSpec&) const = default;
};

void to_json(nlohmann::json& j, const TrialSpec& t);
void from_json(const nlohmann::json& j, TrialSpec& t);

// Candidate prefix sentence. `owner` identifies the pair or item it came
// from ("suite/target"), `id` the specific sentence.
struct SourceSentence {
  std::string id;
  std::string owner;
  std::string text;
};

// Token-length oracle used to decide when a prefix reaches a checkpoint.
class TokenCounter {
 public:
  virtual ~TokenCounter() = default;
  virtual std::size_t count(std::string_view text) const = 0;
  // count(a + " " + b) == count(a) + count(" ") + count(b) for all a, b.
  virtual bool additive() const { return false; }
  virtual std::string name() const = 0;
};

// One token per Unicode code point (the reference backend's tokenization).
class CharacterCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
  bool additive() const override { return true; }
  std::string name() const override { return "characters"; }
};

// Words and punctuation marks; a cheap stand-in for subword tokenizers.
class WordCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override;
  bool additive() const override { return true; }
  std::string name() const override { return "words"; }
};

// Appends '.' unless the sentence already ends in . ! or ? (optionally
// followed by a closing quote or bracket).
std::string terminate_sentence(std::string_view sentence);

// Draws sentences from `pool` (minus `excluded` ids) uniformly without
// replacement, in an order fixed by `seed`, until the joined text reaches
// `checkpoint` tokens. The crossing sentence is kept. Calls with the same
// pool, exclusions and seed draw the same sequence, so prefixes for
// increasing checkpoints are nested.
Prefix sample_prefix(std::span<const SourceSentence> pool,
                     const std::set<std::string>& excluded, int checkpoint,
                     std::uint64_t seed, const TokenCounter& counter);

// Exactly `count` sentences from `pool`, without replacement.
Prefix sample_fixed_count(std::span<const SourceSentence> pool,
                          const std::set<std::string>& excluded, int count,
                          std::uint64_t seed, const TokenCounter& counter);

enum class ExcludeScope { kSuite, kPhenomenon };

struct TrialOptions {
  ExcludeScope exclude_scope = ExcludeScope::kSuite;
};

// Sentences a suite contributes as prefix material for the given polarity.
std::vector<SourceSentence> suite_sentences(const Dataset& dataset,
                                            const std::string& suite_id,
                                            Polarity polarity);

std::vector<SourceSentence> corpus_sentences(const CorpusSource& corpus);

// Targets of one suite, in file order.
std::vector<TargetRef> suite_targets(const Dataset& dataset,
                                     const std::string& suite_id);

std::string suite_phenomenon(const Dataset& dataset, const std::string& suite_id);
std::vector<std::string> suite_ids(const Dataset& dataset);

std::uint64_t trial_seed(std::uint64_t seed, const std::string& dataset,
                         const TargetRef& target, const std::string& strategy);

// One baseline per target plus one trial per (target, strategy, checkpoint>0).
// `corpus` may be null when no control strategy is requested.
std::vector<TrialSpec> build_trials(const Dataset& dataset,
                                    const std::string& target_suite,
                                    const CorpusSource* corpus,
                                    std::span<const PrefixStrategy> strategies,
                                    const LengthGrid& grid, std::uint64_t seed,
                                    const TokenCounter& counter,
                                    const TrialOptions& options = {});

// build_trials over every suite of the dataset, suites in load order.
std::vector<TrialSpec> build_all_trials(const Dataset& dataset,
                                        const CorpusSource* corpus,
                                        std::span<const PrefixStrategy> strategies,
                                        const LengthGrid& grid, std::uint64_t seed,
                                        const TokenCounter& counter,
                                        const TrialOptions& options = {});

std::vector<TrialSpec> build_baseline_trials(const Dataset& dataset,
                                             const std::string& target_suite);

// Prefixes of exactly `count` sentences drawn from one other suite.
std::vector<TrialSpec> build_single_phenomenon_trials(
    const Dataset& dataset, const std::string& target_suite,
    const std::string& source_suite, Polarity polarity, int count,
    std::uint64_t seed, const TokenCounter& counter);

}  // namespace ctxjudge
