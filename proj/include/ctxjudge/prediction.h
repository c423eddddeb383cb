#pragma once

// Cross-condition inequality formulas over region surprisals.
//
//   expr    := conj ("|" conj)*
//   conj    := primary ("&" primary)*
//   primary := "(" expr ")" | cmp
//   cmp     := arith ("<" | ">") arith
//   arith   := atom (("+" | "-") atom)*
//   atom    := "[" integer ";" identifier "]" | number
//
// Comparisons are strict; a tie makes the comparison false.

#include <compare>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace ctxjudge::prediction {

struct RegionRef {
  int region = 1;
  std::string condition;

  auto operator<=>(const RegionRef&) const = default;
};

std::string to_string(const RegionRef& ref);

using Term = std::variant<RegionRef, double>;

enum class ArithOp { kPlus, kMinus };
enum class CompareOp { kLess, kGreater };
enum class LogicOp { kAnd, kOr };

struct Arith {
  Term first;
  std::vector<std::pair<ArithOp, Term>> rest;

  bool operator==(const Arith&) const = default;
};

struct Compare {
  CompareOp op = CompareOp::kLess;
  Arith lhs;
  Arith rhs;

  bool operator==(const Compare&) const = default;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Logical {
  LogicOp op = LogicOp::kAnd;
  FormulaPtr lhs;
  FormulaPtr rhs;

  bool operator==(const Logical& other) const;
};

struct Formula {
  std::variant<Compare, Logical> node;

  bool operator==(const Formula&) const = default;
};

// Surprisal per (region, condition).
using SurprisalTable = std::map<RegionRef, double>;

// Throws FormulaSyntaxError carrying a 0-based character offset.
Formula parse(std::string_view text);

// Canonical text; parse(pretty_print(f)) == f.
std::string pretty_print(const Formula& f);

// Throws EvaluationError naming the first atom missing from the table.
bool evaluate(const Formula& f, const SurprisalTable& surprisals);

// Every region reference, in left-to-right order, duplicates included.
std::vector<RegionRef> region_refs(const Formula& f);

}  // namespace ctxjudge::prediction
