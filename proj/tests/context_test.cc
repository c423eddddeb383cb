#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "ctxjudge/context.h"
#include "ctxjudge/dataset.h"
#include "ctxjudge/error.h"
#include "test_util.h"

namespace ctxjudge {
namespace {

using testing::source_path;

// Whitespace-separated words, counted over the whole text.
class WhitespaceCounter final : public TokenCounter {
 public:
  std::size_t count(std::string_view text) const override {
    std::istringstream in{std::string(text)};
    std::string w;
    std::size_t n = 0;
    while (in >> w) ++n;
    return n;
  }
  std::string name() const override { return "whitespace"; }
};

std::vector<SourceSentence> ten_word_pool(int n) {
  std::vector<SourceSentence> pool;
  for (int i = 0; i < n; ++i) {
    std::string text = "w" + std::to_string(i);
    for (int k = 1; k < 10; ++k) text += " x" + std::to_string(k);
    pool.push_back({"s" + std::to_string(i), "o" + std::to_string(i), text + "."});
  }
  return pool;
}

Dataset fixture() {
  Dataset d;
  d.name = "blimp_mini";
  d.pair_suites = load_pair_suites(source_path("data/fixtures/blimp_mini"));
  return d;
}

// Sentence text -> (suite, pair id, polarity) for every fixture pair.
std::multimap<std::string, std::tuple<std::string, std::string, Polarity>> membership(
    const Dataset& d) {
  std::multimap<std::string, std::tuple<std::string, std::string, Polarity>> m;
  for (const auto& s : d.pair_suites)
    for (const auto& p : s.pairs) {
      m.insert({terminate_sentence(p.acceptable), {s.suite_id, p.id, Polarity::kAcceptable}});
      m.insert({terminate_sentence(p.unacceptable), {s.suite_id, p.id, Polarity::kUnacceptable}});
    }
  return m;
}

TEST(Strategy, ParseAndValidate) {
  EXPECT_EQ(PrefixStrategy::parse("in_domain:acceptable"),
            (PrefixStrategy{Domain::kInDomain, Polarity::kAcceptable}));
  EXPECT_EQ(PrefixStrategy::parse("control"),
            (PrefixStrategy{Domain::kControl, Polarity::kNotApplicable}));
  EXPECT_EQ(PrefixStrategy::parse("out_of_domain:unacceptable").name(),
            "out_of_domain:unacceptable");
  EXPECT_THROW(PrefixStrategy::parse("in_domain"), ConfigError);
  EXPECT_THROW(PrefixStrategy::parse("sideways:acceptable"), ConfigError);
  EXPECT_THROW((PrefixStrategy{Domain::kControl, Polarity::kAcceptable}.validate()), ConfigError);
  EXPECT_THROW((PrefixStrategy{Domain::kInDomain, Polarity::kNotApplicable}.validate()),
               ConfigError);
}

TEST(Grid, Validation) {
  EXPECT_NO_THROW(LengthGrid{}.validate());
  EXPECT_THROW((LengthGrid{{10, 20}, 100}.validate()), ConfigError);
  EXPECT_THROW((LengthGrid{{0, 20, 20}, 100}.validate()), ConfigError);
  EXPECT_THROW((LengthGrid{{0, 50, 20}, 100}.validate()), ConfigError);
  EXPECT_THROW((LengthGrid{{0, 200}, 100}.validate()), ConfigError);
}

TEST(TerminateSentence, AppendsPeriodOnlyWhenNeeded) {
  EXPECT_EQ(terminate_sentence("A cat"), "A cat.");
  EXPECT_EQ(terminate_sentence("A cat."), "A cat.");
  EXPECT_EQ(terminate_sentence("A cat?"), "A cat?");
  EXPECT_EQ(terminate_sentence("He said \"go!\""), "He said \"go!\"");
  EXPECT_EQ(terminate_sentence("(a cat.)"), "(a cat.)");
}

TEST(Counters, CharacterAndWordCounts) {
  EXPECT_EQ(CharacterCounter{}.count("na\xC3\xAFve"), 5u);
  EXPECT_EQ(WordCounter{}.count("The cat, sadly, slept."), 7u);
  EXPECT_EQ(WordCounter{}.count(" "), 0u);
}

TEST(SamplePrefix, TenTokenSentencesCheckpoint25) {
  const auto pool = ten_word_pool(8);
  const auto p = sample_prefix(pool, {}, 25, 1, WhitespaceCounter{});
  EXPECT_EQ(p.sentence_ids.size(), 3u);
  EXPECT_EQ(p.token_length, 30);
  EXPECT_EQ(p.checkpoint, 25);
  EXPECT_FALSE(p.underfilled);
}

TEST(SamplePrefix, CheckpointOneTakesOneSentence) {
  const auto pool = ten_word_pool(8);
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    EXPECT_EQ(sample_prefix(pool, {}, 1, seed, CharacterCounter{}).sentence_ids.size(), 1u);
}

TEST(SamplePrefix, DeterministicAndSeedSensitive) {
  const auto pool = ten_word_pool(30);
  const auto a = sample_prefix(pool, {}, 60, 9, WhitespaceCounter{});
  EXPECT_EQ(a, sample_prefix(pool, {}, 60, 9, WhitespaceCounter{}));
  bool differs = false;
  for (std::uint64_t s = 10; s < 20 && !differs; ++s)
    differs = sample_prefix(pool, {}, 60, s, WhitespaceCounter{}).sentence_ids != a.sentence_ids;
  EXPECT_TRUE(differs);
}

TEST(SamplePrefix, TextIsSpaceJoinedTerminatedSentences) {
  std::vector<SourceSentence> pool{{"a", "a", "No period"}, {"b", "b", "Has one."}};
  const auto p = sample_prefix(pool, {}, 1000, 3, CharacterCounter{});
  ASSERT_EQ(p.sentence_ids.size(), 2u);
  const std::string expect = p.sentence_ids[0] == "a" ? "No period. Has one." : "Has one. No period.";
  EXPECT_EQ(p.text, expect);
  EXPECT_EQ(p.token_length, static_cast<int>(CharacterCounter{}.count(p.text)));
}

TEST(SamplePrefix, UnderfilledAndEmptyPool) {
  const auto pool = ten_word_pool(2);
  const auto p = sample_prefix(pool, {}, 100, 0, WhitespaceCounter{});
  EXPECT_TRUE(p.underfilled);
  EXPECT_EQ(p.sentence_ids.size(), 2u);
  EXPECT_EQ(p.token_length, 20);
  EXPECT_THROW(sample_prefix(pool, {"s0", "s1"}, 5, 0, WhitespaceCounter{}), DataError);
  EXPECT_THROW(sample_prefix({}, {}, 5, 0, WhitespaceCounter{}), DataError);
  EXPECT_THROW(sample_prefix(pool, {}, 0, 0, WhitespaceCounter{}), ConfigError);
}

TEST(SamplePrefix, ExcludedIdsNeverDrawn) {
  const auto pool = ten_word_pool(20);
  const std::set<std::string> excluded{"s3", "s7", "s11"};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = sample_prefix(pool, excluded, 1000, seed, WhitespaceCounter{});
    EXPECT_EQ(p.sentence_ids.size(), 17u);
    for (const auto& id : p.sentence_ids) EXPECT_FALSE(excluded.contains(id));
  }
}

TEST(SampleFixedCount, ExactCountAndErrors) {
  const auto pool = ten_word_pool(12);
  EXPECT_EQ(sample_fixed_count(pool, {}, 10, 4, CharacterCounter{}).sentence_ids.size(), 10u);
  const auto one = ten_word_pool(1);
  const auto p = sample_fixed_count(one, {}, 1, 4, CharacterCounter{});
  ASSERT_EQ(p.sentence_ids.size(), 1u);
  EXPECT_EQ(p.sentence_ids[0], "s0");
  EXPECT_THROW(sample_fixed_count(one, {}, 2, 4, CharacterCounter{}), DataError);
}

TEST(BuildTrials, CountingOnePair) {
  Dataset d;
  d.name = "tiny";
  d.pair_suites = {{"a", "pa", {{"0", "a", "pa", "The cat sleeps.", "The cat sleep."}}},
                   {"b", "pb", {{"0", "b", "pb", "Dogs bark.", "Dogs barks."}}}};
  const std::vector<PrefixStrategy> strategies{PrefixStrategy::parse("out_of_domain:acceptable"),
                                               PrefixStrategy::parse("out_of_domain:unacceptable")};
  const auto trials = build_trials(d, "a", nullptr, strategies, LengthGrid{{0, 100}, 1000}, 1,
                                   CharacterCounter{});
  ASSERT_EQ(trials.size(), 3u);
  EXPECT_TRUE(trials[0].is_baseline());
  EXPECT_TRUE(trials[0].prefix.text.empty());
  EXPECT_EQ(trials[1].strategy, strategies[0]);
  EXPECT_EQ(trials[2].strategy, strategies[1]);
}

TEST(BuildTrials, InDomainExcludesTargetPair) {
  const auto d = fixture();
  const auto strategies = std::vector{PrefixStrategy::parse("in_domain:acceptable"),
                                      PrefixStrategy::parse("in_domain:unacceptable")};
  for (const auto& suite : suite_ids(d)) {
    const auto trials = build_trials(d, suite, nullptr, strategies, LengthGrid{{0, 20, 50, 2000}, 2000},
                                     3, CharacterCounter{});
    for (const auto& t : trials) {
      if (t.is_baseline()) continue;
      const std::string own = t.target.key() + "/";
      for (const auto& id : t.prefix.sentence_ids) EXPECT_NE(id.rfind(own, 0), 0u) << id;
    }
  }
}

TEST(BuildTrials, OutOfDomainAcceptableMembership) {
  const auto d = fixture();
  const auto members = membership(d);
  const auto strategies = std::vector{PrefixStrategy::parse("out_of_domain:acceptable")};
  for (const auto& suite : suite_ids(d)) {
    const auto trials = build_trials(d, suite, nullptr, strategies, LengthGrid{{0, 300}, 1000}, 5,
                                     CharacterCounter{});
    for (const auto& t : trials) {
      if (t.is_baseline()) continue;
      for (const auto& id : t.prefix.sentence_ids) {
        const auto first = id.find('/');
        const auto second = id.find('/', first + 1);
        const std::string src_suite = id.substr(0, first);
        const std::string pair_id = id.substr(first + 1, second - first - 1);
        EXPECT_NE(src_suite, suite);
        const auto* ps = &*std::find_if(d.pair_suites.begin(), d.pair_suites.end(),
                                        [&](const auto& s) { return s.suite_id == src_suite; });
        const auto& pair = *std::find_if(ps->pairs.begin(), ps->pairs.end(),
                                         [&](const auto& p) { return p.id == pair_id; });
        EXPECT_NE(t.prefix.text.find(terminate_sentence(pair.acceptable)), std::string::npos);
      }
      // Every prefix sentence, located by text, is an acceptable member of another suite.
      std::size_t found = 0;
      for (const auto& [text, who] : members) {
        if (t.prefix.text.find(text) == std::string::npos) continue;
        const auto& [src, pid, pol] = who;
        if (pol == Polarity::kAcceptable && src != suite) ++found;
      }
      EXPECT_GE(found, t.prefix.sentence_ids.size());
    }
  }
}

TEST(BuildTrials, UnacceptablePolarityUsesUnacceptableMembers) {
  const auto d = fixture();
  const auto members = membership(d);
  const auto trials = build_trials(d, "npi_present_1", nullptr,
                                   std::vector{PrefixStrategy::parse("in_domain:unacceptable")},
                                   LengthGrid{{0, 200}, 1000}, 11, CharacterCounter{});
  for (const auto& t : trials) {
    if (t.is_baseline()) continue;
    for (const auto& id : t.prefix.sentence_ids) EXPECT_TRUE(id.ends_with("/unacceptable"));
  }
}

TEST(BuildTrials, PrefixesNestAcrossCheckpoints) {
  const auto d = fixture();
  const auto strategies = std::vector{PrefixStrategy::parse("in_domain:acceptable"),
                                      PrefixStrategy::parse("out_of_domain:unacceptable")};
  const LengthGrid grid{{0, 20, 50, 100, 400}, 1000};
  const auto trials = build_all_trials(d, nullptr, strategies, grid, 7, CharacterCounter{});
  std::map<std::pair<std::string, std::string>, std::vector<const TrialSpec*>> by;
  for (const auto& t : trials)
    if (!t.is_baseline()) by[{t.target.key(), t.strategy_name()}].push_back(&t);
  ASSERT_FALSE(by.empty());
  for (const auto& [key, list] : by) {
    for (std::size_t i = 1; i < list.size(); ++i) {
      const auto& a = list[i - 1]->prefix;
      const auto& b = list[i]->prefix;
      ASSERT_LT(a.checkpoint, b.checkpoint);
      if (a.underfilled) continue;
      ASSERT_LE(a.sentence_ids.size(), b.sentence_ids.size());
      EXPECT_TRUE(std::equal(a.sentence_ids.begin(), a.sentence_ids.end(), b.sentence_ids.begin()));
      EXPECT_EQ(b.text.rfind(a.text, 0), 0u);
    }
  }
}

TEST(BuildTrials, PureAndStableUnderTargetReordering) {
  auto d = fixture();
  const auto strategies = std::vector{PrefixStrategy::parse("out_of_domain:acceptable")};
  const LengthGrid grid{{0, 50}, 1000};
  const auto a = build_trials(d, "npi_present_1", nullptr, strategies, grid, 2, CharacterCounter{});
  EXPECT_EQ(a, build_trials(d, "npi_present_1", nullptr, strategies, grid, 2, CharacterCounter{}));
  auto& pairs = d.pair_suites[2].pairs;
  ASSERT_EQ(d.pair_suites[2].suite_id, "npi_present_1");
  std::reverse(pairs.begin(), pairs.end());
  const auto b = build_trials(d, "npi_present_1", nullptr, strategies, grid, 2, CharacterCounter{});
  std::map<std::string, Prefix> pa, pb;
  for (const auto& t : a) pa[t.target.key() + t.strategy_name()] = t.prefix;
  for (const auto& t : b) pb[t.target.key() + t.strategy_name()] = t.prefix;
  EXPECT_EQ(pa, pb);
}

TEST(BuildTrials, ControlNeedsCorpus) {
  const auto d = fixture();
  const auto strategies = std::vector{PrefixStrategy::parse("control")};
  EXPECT_THROW(build_trials(d, "npi_present_1", nullptr, strategies, LengthGrid{{0, 20}, 100}, 1,
                            CharacterCounter{}),
               ConfigError);
  const auto corpus = load_corpus(source_path("data/fixtures/control_corpus.txt"));
  const auto trials = build_trials(d, "npi_present_1", &corpus, strategies,
                                   LengthGrid{{0, 20}, 100}, 1, CharacterCounter{});
  for (const auto& t : trials)
    for (const auto& id : t.prefix.sentence_ids) EXPECT_EQ(id.rfind("corpus:", 0), 0u);
}

TEST(BuildTrials, PhenomenonExcludeScope) {
  Dataset d;
  d.name = "scoped";
  d.pair_suites = {{"a1", "agr", {{"0", "a1", "agr", "A one.", "A ones."}}},
                   {"a2", "agr", {{"0", "a2", "agr", "A two.", "A twos."}}},
                   {"b", "other", {{"0", "b", "other", "B three.", "B threes."}}}};
  const auto strategies = std::vector{PrefixStrategy::parse("out_of_domain:acceptable")};
  const LengthGrid grid{{0, 500}, 1000};
  const auto suite_scope = build_trials(d, "a1", nullptr, strategies, grid, 1, CharacterCounter{});
  EXPECT_EQ(suite_scope[1].prefix.sentence_ids.size(), 2u);
  const auto phen_scope = build_trials(d, "a1", nullptr, strategies, grid, 1, CharacterCounter{},
                                       {ExcludeScope::kPhenomenon});
  ASSERT_EQ(phen_scope[1].prefix.sentence_ids.size(), 1u);
  EXPECT_EQ(phen_scope[1].prefix.sentence_ids[0], "b/0/acceptable");
}

TEST(SinglePhenomenon, ExactCountsFromOneSource) {
  const auto d = fixture();
  const auto trials = build_single_phenomenon_trials(d, "npi_present_1", "wh_questions_object_gap",
                                                     Polarity::kAcceptable, 10, 3, CharacterCounter{});
  ASSERT_EQ(trials.size(), 10u);
  for (const auto& t : trials) {
    EXPECT_EQ(t.prefix.sentence_ids.size(), 10u);
    EXPECT_EQ(t.source_suite, "wh_questions_object_gap");
    for (const auto& id : t.prefix.sentence_ids)
      EXPECT_EQ(id.rfind("wh_questions_object_gap/", 0), 0u);
  }
  EXPECT_THROW(build_single_phenomenon_trials(d, "npi_present_1", "wh_questions_object_gap",
                                              Polarity::kAcceptable, 11, 3, CharacterCounter{}),
               DataError);
  EXPECT_THROW(build_single_phenomenon_trials(d, "npi_present_1", "npi_present_1",
                                              Polarity::kAcceptable, 1, 3, CharacterCounter{}),
               ConfigError);
}

TEST(SinglePhenomenon, SingleSentenceSource) {
  Dataset d;
  d.name = "one";
  d.pair_suites = {{"t", "t", {{"0", "t", "t", "Target.", "Targets."}}},
                   {"s", "s", {{"0", "s", "s", "Only source.", "Only sources."}}}};
  const auto trials =
      build_single_phenomenon_trials(d, "t", "s", Polarity::kAcceptable, 1, 0, CharacterCounter{});
  ASSERT_EQ(trials.size(), 1u);
  EXPECT_EQ(trials[0].prefix.text, "Only source.");
}

TEST(TrialSpecJson, RoundTrip) {
  const auto d = fixture();
  const auto trials = build_trials(d, "npi_present_1", nullptr,
                                   std::vector{PrefixStrategy::parse("in_domain:acceptable")},
                                   LengthGrid{{0, 30}, 100}, 1, CharacterCounter{});
  for (const auto& t : trials) {
    nlohmann::json j = t;
    EXPECT_EQ(j.get<TrialSpec>(), t);
  }
}

}  // namespace
}  // namespace ctxjudge
