#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "ctxjudge/dataset.h"
#include "ctxjudge/error.h"
#include "ctxjudge/text.h"
#include "test_util.h"

namespace ctxjudge {
namespace {

using nlohmann::json;
using testing::source_path;
using testing::TempDir;

std::string record(const std::string& good, const std::string& bad, const std::string& id,
                   const std::string& uid = "toy", const std::string& term = "toy_term") {
  return json{{"sentence_good", good}, {"sentence_bad", bad}, {"linguistics_term", term},
              {"UID", uid}, {"pairID", id}}
             .dump() +
         "\n";
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

TEST(PairSuiteLoad, FieldMapping) {
  const auto s = parse_pair_suite(record("The cat sleeps.", "The cat sleep.", "0"), "x");
  ASSERT_EQ(s.pairs.size(), 1u);
  EXPECT_EQ(s.suite_id, "toy");
  EXPECT_EQ(s.phenomenon, "toy_term");
  EXPECT_EQ(s.pairs[0].acceptable, "The cat sleeps.");
  EXPECT_EQ(s.pairs[0].unacceptable, "The cat sleep.");
  EXPECT_EQ(s.pairs[0].id, "0");
  EXPECT_EQ(s.pairs[0].suite_id, "toy");
}

TEST(PairSuiteLoad, EqualSentencesNameTheLine) {
  const auto text = record("A b.", "A c.", "0") + record("Same.", "Same.", "1");
  const auto msg = message_of([&] { parse_pair_suite(text, "x"); });
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
}

TEST(PairSuiteLoad, MalformedRecordNamesTheLine) {
  const auto text = record("A b.", "A c.", "0") + "\n{not json\n";
  const auto msg = message_of([&] { parse_pair_suite(text, "x"); });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_THROW(parse_pair_suite("{\"sentence_good\": \"a\"}\n", "x"), DataError);
  EXPECT_THROW(parse_pair_suite(record("  ", "b", "0"), "x"), DataError);
}

TEST(PairSuiteLoad, DuplicateIdsAndEmptyFile) {
  EXPECT_THROW(parse_pair_suite(record("A.", "B.", "7") + record("C.", "D.", "7"), "x"),
               DataError);
  EXPECT_THROW(parse_pair_suite("", "x"), DataError);
  EXPECT_THROW(parse_pair_suite("\n  \n", "x"), DataError);
}

TEST(PairSuiteLoad, MixedSuitesRejected) {
  EXPECT_THROW(parse_pair_suite(record("A.", "B.", "0", "s1") + record("C.", "D.", "1", "s2"), "x"),
               DataError);
}

TEST(PairSuiteLoad, ThousandRecordFile) {
  TempDir dir;
  std::string text;
  for (int i = 0; i < 1000; ++i)
    text += record("The dog " + std::to_string(i) + " barks.",
                   "The dog " + std::to_string(i) + " bark.", std::to_string(i));
  write_file_atomic(dir / "toy.jsonl", text);
  const auto s = load_pair_suite(dir / "toy.jsonl");
  EXPECT_EQ(s.pairs.size(), 1000u);
  EXPECT_EQ(s.pairs.front().id, "0");
  EXPECT_EQ(s.pairs.back().id, "999");
}

TEST(PairSuiteLoad, FixtureSuitesLoadDeterministically) {
  const auto a = load_pair_suites(source_path("data/fixtures/blimp_mini"));
  const auto b = load_pair_suites(source_path("data/fixtures/blimp_mini"));
  ASSERT_EQ(a.size(), 5u);
  EXPECT_EQ(a, b);
  for (const auto& s : a) EXPECT_EQ(s.pairs.size(), 10u);
}

TEST(PairSuiteProperty, SerializeRoundTrip) {
  for (const auto& s : load_pair_suites(source_path("data/fixtures/blimp_mini"))) {
    const auto again = parse_pair_suite(serialize_pair_suite(s), "other");
    EXPECT_EQ(again, s);
  }
  PairSuite odd{"u", "p", {{"a\"1", "u", "p", "Quote \" and \\ and \xC3\xA9.", "Other."}}};
  EXPECT_EQ(parse_pair_suite(serialize_pair_suite(odd), "x"), odd);
}

std::string region_doc(const json& items, const std::string& prediction = "[6;grammatical] < [6;ungrammatical]") {
  return json{{"suite", "rs"},
              {"phenomenon", "ph"},
              {"acceptable_condition", "grammatical"},
              {"unacceptable_condition", "ungrammatical"},
              {"prediction", prediction},
              {"items", items}}
      .dump();
}

json six_region_item(int id) {
  return {{"item", id},
          {"conditions",
           {{"grammatical", {"The keys", "to", "the", "cabinet", "are", "here."}},
            {"ungrammatical", {"The keys", "to", "the", "cabinet", "is", "here."}}}}};
}

TEST(RegionSuiteLoad, WellFormedTwoConditionItem) {
  const auto s = parse_region_suite(region_doc(json::array({six_region_item(1)})), "x");
  ASSERT_EQ(s.items.size(), 1u);
  const auto& item = s.items[0];
  EXPECT_EQ(item.conditions.size(), 2u);
  const auto& g = item.conditions.at("grammatical");
  ASSERT_EQ(g.regions.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(g.regions[i].number, i + 1);
  EXPECT_EQ(g.sentence(), "The keys to the cabinet are here.");
  EXPECT_EQ(s.acceptable_condition, "grammatical");
}

TEST(RegionSuiteLoad, RegionCountMismatch) {
  json item = six_region_item(1);
  item["conditions"]["ungrammatical"] = {"The keys", "to", "the", "cabinet", "is"};
  const auto msg =
      message_of([&] { parse_region_suite(region_doc(json::array({item}), "[5;grammatical] < [5;ungrammatical]"), "x"); });
  EXPECT_NE(msg.find("region count mismatch"), std::string::npos) << msg;
}

TEST(RegionSuiteLoad, PredictionErrors) {
  const auto items = json::array({six_region_item(1)});
  EXPECT_THROW(parse_region_suite(region_doc(items, "[6;grammatical] <"), "x"), DataError);
  const auto msg =
      message_of([&] { parse_region_suite(region_doc(items, "[6;grammatical] < [6;nope]"), "x"); });
  EXPECT_NE(msg.find("unknown condition"), std::string::npos) << msg;
  EXPECT_THROW(parse_region_suite(region_doc(items, "[7;grammatical] < [7;ungrammatical]"), "x"),
               DataError);
}

TEST(RegionSuiteLoad, NeedsTwoConditions) {
  json item = six_region_item(1);
  item["conditions"].erase("ungrammatical");
  EXPECT_THROW(parse_region_suite(region_doc(json::array({item}), "[1;grammatical] < 1"), "x"),
               DataError);
}

TEST(RegionSuiteLoad, EmptyRegionsAreSkippedInTheSentence) {
  json item = six_region_item(1);
  item["conditions"]["grammatical"][2] = "";
  const auto s = parse_region_suite(region_doc(json::array({item})), "x");
  EXPECT_EQ(s.items[0].conditions.at("grammatical").sentence(), "The keys to cabinet are here.");
}

TEST(RegionSuiteLoad, TwentyItemFixture) {
  const auto s = load_region_suite(source_path("tests/data/region_suite_20.json"));
  ASSERT_EQ(s.items.size(), 20u);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(s.items[i].item_id, i + 1);
}

TEST(RegionSuiteLoad, BundledSuitesSatisfyItemInvariants) {
  const auto suites = load_region_suites(source_path("data/fixtures/syntaxgym_mini"));
  ASSERT_EQ(suites.size(), 3u);
  for (const auto& s : suites) {
    for (const auto& item : s.items) {
      ASSERT_GE(item.conditions.size(), 2u);
      const auto n = item.conditions.begin()->second.regions.size();
      prediction::SurprisalTable table;
      for (const auto& [name, seq] : item.conditions) {
        EXPECT_EQ(seq.regions.size(), n);
        for (const auto& r : seq.regions) table[{r.number, name}] = 1.0;
      }
      EXPECT_NO_THROW(prediction::evaluate(item.formula, table));
    }
  }
}

TEST(CorpusLoad, BlankLinesDroppedAndTrimmed) {
  TempDir dir;
  write_file_atomic(dir / "c.txt", "  First one.  \n\nSecond.\n");
  const auto c = load_corpus(dir / "c.txt");
  ASSERT_EQ(c.sentences.size(), 2u);
  EXPECT_EQ(c.sentences[0], "First one.");
}

TEST(CorpusLoad, LineCountAndErrors) {
  TempDir dir;
  std::string text;
  for (int i = 0; i < 17; ++i) text += "Sentence " + std::to_string(i) + ".\n";
  write_file_atomic(dir / "c.txt", text);
  EXPECT_EQ(load_corpus(dir / "c.txt").sentences.size(), 17u);
  write_file_atomic(dir / "empty.txt", "");
  const auto msg = message_of([&] { load_corpus(dir / "empty.txt"); });
  EXPECT_NE(msg.find("zero usable sentences"), std::string::npos) << msg;
  EXPECT_THROW(load_corpus(dir / "missing.txt"), DataError);
}

TEST(ExpandInputs, DirectoryOrderAndMissingPath) {
  TempDir dir;
  write_file_atomic(dir / "b.jsonl", record("A.", "B.", "0", "b"));
  write_file_atomic(dir / "a.jsonl", record("A.", "B.", "0", "a"));
  write_file_atomic(dir / "notes.txt", "x");
  const auto files = expand_inputs(dir.path(), ".jsonl");
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename(), "a.jsonl");
  EXPECT_THROW(expand_inputs(dir / "nope", ".jsonl"), DataError);
}

}  // namespace
}  // namespace ctxjudge
