#include "ctxjudge/context.h"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "ctxjudge/error.h"
#include "ctxjudge/random.h"
#include "ctxjudge/text.h"

namespace ctxjudge {

using nlohmann::json;

std::string to_string(Domain d) {
  switch (d) {
    case Domain::kInDomain: return "in_domain";
    case Domain::kOutOfDomain: return "out_of_domain";
    case Domain::kControl: return "control";
  }
  return "?";
}

std::string to_string(Polarity p) {
  switch (p) {
    case Polarity::kAcceptable: return "acceptable";
    case Polarity::kUnacceptable: return "unacceptable";
    case Polarity::kNotApplicable: return "not_applicable";
  }
  return "?";
}

Domain parse_domain(std::string_view s) {
  if (s == "in_domain") return Domain::kInDomain;
  if (s == "out_of_domain") return Domain::kOutOfDomain;
  if (s == "control") return Domain::kControl;
  throw ConfigError("unknown prefix domain '" + std::string(s) + "'");
}

Polarity parse_polarity(std::string_view s) {
  if (s == "acceptable") return Polarity::kAcceptable;
  if (s == "unacceptable") return Polarity::kUnacceptable;
  if (s == "not_applicable") return Polarity::kNotApplicable;
  throw ConfigError("unknown prefix polarity '" + std::string(s) + "'");
}

std::string PrefixStrategy::name() const {
  if (domain == Domain::kControl) return "control";
  return to_string(domain) + ":" + to_string(polarity);
}

PrefixStrategy PrefixStrategy::parse(std::string_view text) {
  const auto t = trim(text);
  PrefixStrategy s;
  const auto colon = t.find(':');
  if (colon == std::string_view::npos) {
    s.domain = parse_domain(t);
    s.polarity = s.domain == Domain::kControl ? Polarity::kNotApplicable
                                              : Polarity::kAcceptable;
    if (s.domain != Domain::kControl)
      throw ConfigError("strategy '" + std::string(t) + "' needs a polarity");
  } else {
    s.domain = parse_domain(trim(t.substr(0, colon)));
    s.polarity = parse_polarity(trim(t.substr(colon + 1)));
  }
  s.validate();
  return s;
}

void PrefixStrategy::validate() const {
  const bool control = domain == Domain::kControl;
  const bool na = polarity == Polarity::kNotApplicable;
  if (control != na)
    throw ConfigError("invalid strategy " + to_string(domain) + ":" +
                      to_string(polarity) +
                      " (control prefixes take no polarity; others need one)");
}

void LengthGrid::validate() const {
  if (checkpoints.empty()) throw ConfigError("length grid is empty");
  if (std::find(checkpoints.begin(), checkpoints.end(), 0) == checkpoints.end())
    throw ConfigError("length grid must include 0 (the no-prefix baseline)");
  for (std::size_t i = 1; i < checkpoints.size(); ++i) {
    if (checkpoints[i] <= checkpoints[i - 1])
      throw ConfigError("length grid must be strictly ascending");
  }
  if (checkpoints.front() < 0) throw ConfigError("negative checkpoint");
  if (checkpoints.back() > budget_cap)
    throw ConfigError("checkpoint " + std::to_string(checkpoints.back()) +
                      " exceeds budget cap " + std::to_string(budget_cap));
}

void to_json(json& j, const TrialSpec& t) {
  j = json{{"dataset", t.dataset},
           {"kind", t.target.kind == TargetKind::kPair ? "pair" : "item"},
           {"suite", t.target.suite_id},
           {"target", t.target.target_id},
           {"strategy", t.strategy_name()},
           {"seed", t.seed},
           {"checkpoint", t.prefix.checkpoint},
           {"token_length", t.prefix.token_length},
           {"underfilled", t.prefix.underfilled},
           {"sentence_ids", t.prefix.sentence_ids},
           {"prefix", t.prefix.text}};
  if (t.source_suite) j["source_suite"] = *t.source_suite;
}

void from_json(const json& j, TrialSpec& t) {
  t.dataset = j.at("dataset").get<std::string>();
  t.target.kind = j.at("kind").get<std::string>() == "pair" ? TargetKind::kPair
                                                            : TargetKind::kItem;
  t.target.suite_id = j.at("suite").get<std::string>();
  t.target.target_id = j.at("target").get<std::string>();
  const auto strategy = j.at("strategy").get<std::string>();
  if (strategy == "baseline")
    t.strategy.reset();
  else
    t.strategy = PrefixStrategy::parse(strategy);
  t.seed = j.at("seed").get<std::uint64_t>();
  t.prefix.checkpoint = j.at("checkpoint").get<int>();
  t.prefix.token_length = j.at("token_length").get<int>();
  t.prefix.underfilled = j.at("underfilled").get<bool>();
  t.prefix.sentence_ids = j.at("sentence_ids").get<std::vector<std::string>>();
  t.prefix.text = j.at("prefix").get<std::string>();
  if (j.contains("source_suite"))
    t.source_suite = j.at("source_suite").get<std::string>();
  else
    t.source_suite.reset();
}

std::size_t CharacterCounter::count(std::string_view text) const {
  return utf8_length(text);
}

std::size_t WordCounter::count(std::string_view text) const {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      in_word = false;
    } else if (uc < 0x80 && std::ispunct(uc)) {
      ++n;
      in_word = false;
    } else if (!in_word) {
      ++n;
      in_word = true;
    }
  }
  return n;
}

std::string terminate_sentence(std::string_view sentence) {
  std::string s(trim(sentence));
  static constexpr std::string_view kClosers[] = {"\"", "'", ")", "]",
                                                  "”", "’"};
  std::string_view body = s;
  for (bool stripped = true; stripped && !body.empty();) {
    stripped = false;
    for (auto closer : kClosers) {
      if (body.size() >= closer.size() &&
          body.substr(body.size() - closer.size()) == closer) {
        body.remove_suffix(closer.size());
        stripped = true;
        break;
      }
    }
  }
  if (!body.empty() &&
      (body.back() == '.' || body.back() == '!' || body.back() == '?'))
    return s;
  s.push_back('.');
  return s;
}

namespace {

// Draws pool indices in a seed-determined uniform order without materializing
// the whole permutation (sparse Fisher-Yates).
class LazyPermutation {
 public:
  LazyPermutation(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) {}

  bool done() const { return i_ >= n_; }

  std::size_t next() {
    const std::size_t j = i_ + static_cast<std::size_t>(rng_.below(n_ - i_));
    const std::size_t vi = at(i_);
    const std::size_t vj = at(j);
    moved_[j] = vi;
    moved_.erase(i_);
    ++i_;
    return vj;
  }

 private:
  std::size_t at(std::size_t k) const {
    const auto it = moved_.find(k);
    return it == moved_.end() ? k : it->second;
  }

  std::size_t n_;
  std::size_t i_ = 0;
  Rng rng_;
  std::unordered_map<std::size_t, std::size_t> moved_;
};

class PrefixAccumulator {
 public:
  explicit PrefixAccumulator(const TokenCounter& counter) : counter_(counter) {
    if (counter_.additive()) separator_ = counter_.count(" ");
  }

  void add(const SourceSentence& s) {
    const std::string sentence = terminate_sentence(s.text);
    if (!prefix_.text.empty()) prefix_.text.push_back(' ');
    prefix_.text += sentence;
    prefix_.sentence_ids.push_back(s.id);
    if (counter_.additive()) {
      if (prefix_.sentence_ids.size() > 1) length_ += separator_;
      length_ += counter_.count(sentence);
    } else {
      length_ = counter_.count(prefix_.text);
    }
    prefix_.token_length = static_cast<int>(length_);
  }

  std::size_t length() const { return length_; }
  std::size_t sentences() const { return prefix_.sentence_ids.size(); }
  Prefix take() { return std::move(prefix_); }

 private:
  const TokenCounter& counter_;
  std::size_t separator_ = 0;
  std::size_t length_ = 0;
  Prefix prefix_;
};

}  // namespace

Prefix sample_prefix(std::span<const SourceSentence> pool,
                     const std::set<std::string>& excluded, int checkpoint,
                     std::uint64_t seed, const TokenCounter& counter) {
  if (checkpoint < 1) throw ConfigError("checkpoint must be >= 1");
  LazyPermutation order(pool.size(), seed);
  PrefixAccumulator acc(counter);
  while (acc.length() < static_cast<std::size_t>(checkpoint) && !order.done()) {
    const auto& s = pool[order.next()];
    if (excluded.contains(s.id)) continue;
    acc.add(s);
  }
  if (acc.sentences() == 0) throw DataError("empty eligible prefix pool");
  const bool underfilled = acc.length() < static_cast<std::size_t>(checkpoint);
  Prefix p = acc.take();
  p.checkpoint = checkpoint;
  p.underfilled = underfilled;
  return p;
}

Prefix sample_fixed_count(std::span<const SourceSentence> pool,
                          const std::set<std::string>& excluded, int count,
                          std::uint64_t seed, const TokenCounter& counter) {
  if (count < 1) throw ConfigError("sentence count must be >= 1");
  LazyPermutation order(pool.size(), seed);
  PrefixAccumulator acc(counter);
  while (acc.sentences() < static_cast<std::size_t>(count) && !order.done()) {
    const auto& s = pool[order.next()];
    if (excluded.contains(s.id)) continue;
    acc.add(s);
  }
  if (acc.sentences() < static_cast<std::size_t>(count))
    throw DataError("source pool has " + std::to_string(acc.sentences()) +
                    " eligible sentences, fewer than the requested " +
                    std::to_string(count));
  Prefix p = acc.take();
  p.checkpoint = count;
  return p;
}

namespace {

const PairSuite* find_pair_suite(const Dataset& d, const std::string& id) {
  for (const auto& s : d.pair_suites)
    if (s.suite_id == id) return &s;
  return nullptr;
}

const RegionSuite* find_region_suite(const Dataset& d, const std::string& id) {
  for (const auto& s : d.region_suites)
    if (s.suite_id == id) return &s;
  return nullptr;
}

std::string region_condition_for(const RegionSuite& s, Polarity polarity) {
  const std::string& cond = polarity == Polarity::kAcceptable
                                ? s.acceptable_condition
                                : s.unacceptable_condition;
  if (cond.empty())
    throw DataError("region suite '" + s.suite_id + "' declares no " +
                    to_string(polarity) + " condition");
  return cond;
}

std::set<std::string> target_sentence_ids(const Dataset& dataset,
                                          const TargetRef& target) {
  std::set<std::string> ids;
  const std::string owner = target.key();
  if (const auto* ps = find_pair_suite(dataset, target.suite_id)) {
    (void)ps;
    ids.insert(owner + "/acceptable");
    ids.insert(owner + "/unacceptable");
  } else if (const auto* rs = find_region_suite(dataset, target.suite_id)) {
    for (const auto& item : rs->items) {
      if (std::to_string(item.item_id) != target.target_id) continue;
      for (const auto& [name, seq] : item.conditions) ids.insert(owner + "/" + name);
    }
  }
  return ids;
}

}  // namespace

std::vector<SourceSentence> suite_sentences(const Dataset& dataset,
                                            const std::string& suite_id,
                                            Polarity polarity) {
  if (polarity == Polarity::kNotApplicable)
    throw ConfigError("suite sentences need a polarity");
  std::vector<SourceSentence> out;
  if (const auto* ps = find_pair_suite(dataset, suite_id)) {
    const std::string tag =
        polarity == Polarity::kAcceptable ? "acceptable" : "unacceptable";
    out.reserve(ps->pairs.size());
    for (const auto& p : ps->pairs) {
      const std::string owner = suite_id + "/" + p.id;
      out.push_back({owner + "/" + tag, owner,
                     polarity == Polarity::kAcceptable ? p.acceptable
                                                       : p.unacceptable});
    }
    return out;
  }
  if (const auto* rs = find_region_suite(dataset, suite_id)) {
    const std::string cond = region_condition_for(*rs, polarity);
    out.reserve(rs->items.size());
    for (const auto& item : rs->items) {
      const std::string owner = suite_id + "/" + std::to_string(item.item_id);
      out.push_back({owner + "/" + cond, owner, item.conditions.at(cond).sentence()});
    }
    return out;
  }
  throw DataError("unknown suite '" + suite_id + "'");
}

std::vector<SourceSentence> corpus_sentences(const CorpusSource& corpus) {
  std::vector<SourceSentence> out;
  out.reserve(corpus.sentences.size());
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const std::string id = "corpus:" + corpus.name + "/" + std::to_string(i + 1);
    out.push_back({id, id, corpus.sentences[i]});
  }
  return out;
}

std::vector<TargetRef> suite_targets(const Dataset& dataset,
                                     const std::string& suite_id) {
  std::vector<TargetRef> out;
  if (const auto* ps = find_pair_suite(dataset, suite_id)) {
    for (const auto& p : ps->pairs) out.push_back({TargetKind::kPair, suite_id, p.id});
    return out;
  }
  if (const auto* rs = find_region_suite(dataset, suite_id)) {
    for (const auto& item : rs->items)
      out.push_back({TargetKind::kItem, suite_id, std::to_string(item.item_id)});
    return out;
  }
  throw DataError("unknown suite '" + suite_id + "'");
}

std::string suite_phenomenon(const Dataset& dataset, const std::string& suite_id) {
  if (const auto* ps = find_pair_suite(dataset, suite_id)) return ps->phenomenon;
  if (const auto* rs = find_region_suite(dataset, suite_id)) return rs->phenomenon;
  throw DataError("unknown suite '" + suite_id + "'");
}

std::vector<std::string> suite_ids(const Dataset& dataset) {
  std::vector<std::string> ids;
  for (const auto& s : dataset.pair_suites) ids.push_back(s.suite_id);
  for (const auto& s : dataset.region_suites) ids.push_back(s.suite_id);
  return ids;
}

std::uint64_t trial_seed(std::uint64_t seed, const std::string& dataset,
                         const TargetRef& target, const std::string& strategy) {
  return mix_seed(seed, dataset + "\x1f" + target.key() + "\x1f" + strategy);
}

std::vector<TrialSpec> build_baseline_trials(const Dataset& dataset,
                                             const std::string& target_suite) {
  std::vector<TrialSpec> trials;
  for (const auto& target : suite_targets(dataset, target_suite)) {
    TrialSpec t;
    t.dataset = dataset.name;
    t.target = target;
    trials.push_back(std::move(t));
  }
  return trials;
}

std::vector<TrialSpec> build_trials(const Dataset& dataset,
                                    const std::string& target_suite,
                                    const CorpusSource* corpus,
                                    std::span<const PrefixStrategy> strategies,
                                    const LengthGrid& grid, std::uint64_t seed,
                                    const TokenCounter& counter,
                                    const TrialOptions& options) {
  if (strategies.empty()) throw ConfigError("no prefix strategies");
  grid.validate();
  for (const auto& s : strategies) s.validate();

  const auto targets = suite_targets(dataset, target_suite);
  const std::string phenomenon = suite_phenomenon(dataset, target_suite);

  // Pools are built once per strategy; exclusions are applied per target.
  std::vector<std::vector<SourceSentence>> pools;
  for (const auto& strategy : strategies) {
    std::vector<SourceSentence> pool;
    switch (strategy.domain) {
      case Domain::kInDomain:
        pool = suite_sentences(dataset, target_suite, strategy.polarity);
        break;
      case Domain::kOutOfDomain:
        for (const auto& other : suite_ids(dataset)) {
          if (other == target_suite) continue;
          if (options.exclude_scope == ExcludeScope::kPhenomenon &&
              suite_phenomenon(dataset, other) == phenomenon)
            continue;
          auto more = suite_sentences(dataset, other, strategy.polarity);
          pool.insert(pool.end(), std::make_move_iterator(more.begin()),
                      std::make_move_iterator(more.end()));
        }
        break;
      case Domain::kControl:
        if (corpus == nullptr)
          throw ConfigError("control strategy requested without a corpus");
        pool = corpus_sentences(*corpus);
        break;
    }
    pools.push_back(std::move(pool));
  }

  std::vector<TrialSpec> trials;
  for (const auto& target : targets) {
    TrialSpec base;
    base.dataset = dataset.name;
    base.target = target;
    trials.push_back(base);

    std::set<std::string> own_ids;
    for (std::size_t si = 0; si < strategies.size(); ++si) {
      const auto& strategy = strategies[si];
      const std::set<std::string> none;
      if (strategy.domain == Domain::kInDomain && own_ids.empty())
        own_ids = target_sentence_ids(dataset, target);
      const auto& excluded = strategy.domain == Domain::kInDomain ? own_ids : none;
      const auto tseed = trial_seed(seed, dataset.name, target, strategy.name());
      for (int checkpoint : grid.checkpoints) {
        if (checkpoint == 0) continue;
        TrialSpec t = base;
        t.strategy = strategy;
        t.seed = tseed;
        t.prefix = sample_prefix(pools[si], excluded, checkpoint, tseed, counter);
        trials.push_back(std::move(t));
      }
    }
  }
  return trials;
}

std::vector<TrialSpec> build_all_trials(const Dataset& dataset,
                                        const CorpusSource* corpus,
                                        std::span<const PrefixStrategy> strategies,
                                        const LengthGrid& grid, std::uint64_t seed,
                                        const TokenCounter& counter,
                                        const TrialOptions& options) {
  std::vector<TrialSpec> all;
  for (const auto& id : suite_ids(dataset)) {
    auto part = build_trials(dataset, id, corpus, strategies, grid, seed, counter,
                             options);
    all.insert(all.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return all;
}

std::vector<TrialSpec> build_single_phenomenon_trials(
    const Dataset& dataset, const std::string& target_suite,
    const std::string& source_suite, Polarity polarity, int count,
    std::uint64_t seed, const TokenCounter& counter) {
  if (source_suite == target_suite)
    throw ConfigError("source suite must differ from the target suite");
  if (count < 1) throw ConfigError("sentence count must be >= 1");
  const auto pool = suite_sentences(dataset, source_suite, polarity);
  if (pool.size() < static_cast<std::size_t>(count))
    throw DataError("source suite '" + source_suite + "' has " +
                    std::to_string(pool.size()) + " sentences, fewer than " +
                    std::to_string(count));
  const PrefixStrategy strategy{Domain::kOutOfDomain, polarity};
  strategy.validate();
  std::vector<TrialSpec> trials;
  for (const auto& target : suite_targets(dataset, target_suite)) {
    TrialSpec t;
    t.dataset = dataset.name;
    t.target = target;
    t.strategy = strategy;
    t.source_suite = source_suite;
    t.seed = trial_seed(seed, dataset.name, target,
                        strategy.name() + "@" + source_suite);
    t.prefix = sample_fixed_count(pool, {}, count, t.seed, counter);
    trials.push_back(std::move(t));
  }
  return trials;
}

}  // namespace ctxjudge
