#include <gtest/gtest.h>

#include "ctxjudge/error.h"
#include "ctxjudge/prediction.h"
#include "formula_gen.h"

namespace ctxjudge::prediction {
namespace {

SurprisalTable table(std::initializer_list<std::tuple<int, const char*, double>> entries) {
  SurprisalTable t;
  for (const auto& [r, c, v] : entries) t[{r, c}] = v;
  return t;
}

TEST(PredictionParse, SingleComparison) {
  const auto f = parse("[6;g] < [6;u]");
  const auto* cmp = std::get_if<Compare>(&f.node);
  ASSERT_NE(cmp, nullptr);
  EXPECT_EQ(cmp->op, CompareOp::kLess);
  EXPECT_EQ(std::get<RegionRef>(cmp->lhs.first), (RegionRef{6, "g"}));
  EXPECT_EQ(std::get<RegionRef>(cmp->rhs.first), (RegionRef{6, "u"}));
  EXPECT_TRUE(cmp->lhs.rest.empty());
}

TEST(PredictionParse, ParenthesisedConjunction) {
  const auto f = parse("([2;a] > [2;b]) & ([3;a] > [3;b])");
  const auto* l = std::get_if<Logical>(&f.node);
  ASSERT_NE(l, nullptr);
  EXPECT_EQ(l->op, LogicOp::kAnd);
  EXPECT_TRUE(std::holds_alternative<Compare>(l->lhs->node));
  EXPECT_TRUE(std::holds_alternative<Compare>(l->rhs->node));
}

TEST(PredictionParse, TruncatedInputReportsPosition7) {
  try {
    parse("[2;a] <");
    FAIL() << "expected a syntax error";
  } catch (const FormulaSyntaxError& e) {
    EXPECT_EQ(e.position(), 7u);
  }
}

TEST(PredictionParse, EmptyInputIsAnError) {
  EXPECT_THROW(parse(""), FormulaSyntaxError);
  EXPECT_THROW(parse("   "), FormulaSyntaxError);
}

TEST(PredictionParse, MalformedInputs) {
  for (const char* bad : {"[0;a] < [1;b]", "[1;] < [1;b]", "[1;a] < [1;b] &", "([1;a] < [1;b]",
                          "[1;a] [1;b]", "[1;a] = [1;b]", "[x;a] < 1", "1 < 2 )", "[1;a] < 1."}) {
    EXPECT_THROW(parse(bad), FormulaSyntaxError) << bad;
  }
}

TEST(PredictionParse, AndBindsTighterThanOr) {
  const auto f = parse("[1;a] < 1 | [1;a] < 2 & [1;a] > 3");
  const auto& top = std::get<Logical>(f.node);
  EXPECT_EQ(top.op, LogicOp::kOr);
  EXPECT_EQ(std::get<Logical>(top.rhs->node).op, LogicOp::kAnd);
}

TEST(PredictionParse, ArithmeticAndLiterals) {
  const auto f = parse("[1;a] + [2;a] - 0.5 > 1e1");
  const auto& cmp = std::get<Compare>(f.node);
  ASSERT_EQ(cmp.lhs.rest.size(), 2u);
  EXPECT_EQ(cmp.lhs.rest[1].first, ArithOp::kMinus);
  EXPECT_DOUBLE_EQ(std::get<double>(cmp.rhs.first), 10.0);
  EXPECT_TRUE(evaluate(f, table({{1, "a", 6.0}, {2, "a", 5.0}})));
  EXPECT_FALSE(evaluate(f, table({{1, "a", 5.0}, {2, "a", 5.5}})));
}

TEST(PredictionEvaluate, Examples) {
  const auto f = parse("[6;g] < [6;u]");
  EXPECT_TRUE(evaluate(f, table({{6, "g", 1.0}, {6, "u", 2.0}})));
  EXPECT_FALSE(evaluate(f, table({{6, "g", 2.0}, {6, "u", 2.0}})));
  const auto d = parse("([1;a] > [1;b]) | ([2;a] > [2;b])");
  EXPECT_TRUE(evaluate(d, table({{1, "a", 0}, {1, "b", 1}, {2, "a", 3}, {2, "b", 1}})));
}

TEST(PredictionEvaluate, DisjunctionTruthTable) {
  const auto d = parse("([1;a] > [1;b]) | ([2;a] > [2;b])");
  const auto c = parse("([1;a] > [1;b]) & ([2;a] > [2;b])");
  for (int first = 0; first < 2; ++first) {
    for (int second = 0; second < 2; ++second) {
      const auto t = table({{1, "a", first ? 2.0 : 0.0}, {1, "b", 1.0},
                            {2, "a", second ? 2.0 : 0.0}, {2, "b", 1.0}});
      EXPECT_EQ(evaluate(d, t), first || second);
      EXPECT_EQ(evaluate(c, t), first && second);
    }
  }
}

TEST(PredictionEvaluate, MissingAtomIsNamed) {
  const auto f = parse("[1;a] < [3;zz]");
  try {
    evaluate(f, table({{1, "a", 0.0}}));
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("[3;zz]"), std::string::npos);
  }
}

TEST(PredictionEvaluate, MissingAtomReportedEvenWhenShortCircuitPossible) {
  const auto f = parse("[1;a] < 1 | [2;b] < 1");
  EXPECT_THROW(evaluate(f, table({{1, "a", 0.0}})), EvaluationError);
}

TEST(PredictionRefs, LeftToRightWithDuplicates) {
  const auto refs = region_refs(parse("[1;a] + [2;b] < [1;a] & 3 > [4;c]"));
  ASSERT_EQ(refs.size(), 4u);
  EXPECT_EQ(refs[0], (RegionRef{1, "a"}));
  EXPECT_EQ(refs[2], (RegionRef{1, "a"}));
  EXPECT_EQ(refs[3], (RegionRef{4, "c"}));
}

TEST(PredictionProperty, RoundTripAndOracleAgreement) {
  testing::FormulaGen gen(2024);
  for (int i = 0; i < 400; ++i) {
    const auto tree = gen.node(4);
    const auto text = gen.text(*tree);
    const auto f = parse(text);
    EXPECT_EQ(parse(pretty_print(f)), f) << text;
    EXPECT_EQ(pretty_print(parse(pretty_print(f))), pretty_print(f));
    for (int k = 0; k < 5; ++k) {
      const auto t = gen.table();
      SurprisalTable st;
      for (const auto& [key, v] : t) st[{key.first, key.second}] = v;
      EXPECT_EQ(evaluate(f, st), testing::gen_eval(*tree, t)) << text;
    }
  }
}

TEST(PredictionProperty, LoweringLeftOperandOfLessNeverFlipsToFalse) {
  const auto f = parse("[1;a] < [1;b]");
  testing::FormulaGen gen(5);
  for (int i = 0; i < 500; ++i) {
    const auto t = gen.table();
    SurprisalTable st;
    for (const auto& [key, v] : t) st[{key.first, key.second}] = v;
    const bool before = evaluate(f, st);
    st[{1, "a"}] -= 0.5 * (i % 7);
    if (before) EXPECT_TRUE(evaluate(f, st));
  }
}

TEST(PredictionProperty, TotalOnCoveringTables) {
  testing::FormulaGen gen(77);
  for (int i = 0; i < 200; ++i) {
    const auto f = parse(gen.text(*gen.node(3)));
    SurprisalTable st;
    for (const auto& ref : region_refs(f)) st[ref] = static_cast<double>(i % 5);
    EXPECT_NO_THROW(evaluate(f, st));
  }
}

}  // namespace
}  // namespace ctxjudge::prediction
