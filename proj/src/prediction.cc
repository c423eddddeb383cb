#include "ctxjudge/prediction.h"

#include <cctype>
#include <charconv>
#include <cmath>

#include "ctxjudge/error.h"
#include "ctxjudge/text.h"

namespace ctxjudge::prediction {

std::string to_string(const RegionRef& ref) {
  return "[" + std::to_string(ref.region) + ";" + ref.condition + "]";
}

bool Logical::operator==(const Logical& other) const {
  if (op != other.op) return false;
  auto same = [](const FormulaPtr& a, const FormulaPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    return *a == *b;
  };
  return same(lhs, other.lhs) && same(rhs, other.rhs);
}

namespace {

bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
         c == '.';
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse_all() {
    skip_ws();
    if (at_end()) throw FormulaSyntaxError("empty formula", pos_);
    Formula f = parse_or();
    skip_ws();
    if (!at_end()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw FormulaSyntaxError(msg, pos_);
  }

  bool at_end() const { return pos_ >= text_.size(); }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return !at_end() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) {
      fail(at_end() ? std::string("expected '") + c + "', got end of input"
                    : std::string("expected '") + c + "'");
    }
    ++pos_;
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (peek('|')) {
      ++pos_;
      Formula rhs = parse_and();
      lhs = Formula{Logical{LogicOp::kOr,
                            std::make_shared<const Formula>(std::move(lhs)),
                            std::make_shared<const Formula>(std::move(rhs))}};
    }
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_primary();
    while (peek('&')) {
      ++pos_;
      Formula rhs = parse_primary();
      lhs = Formula{Logical{LogicOp::kAnd,
                            std::make_shared<const Formula>(std::move(lhs)),
                            std::make_shared<const Formula>(std::move(rhs))}};
    }
    return lhs;
  }

  Formula parse_primary() {
    if (peek('(')) {
      ++pos_;
      Formula inner = parse_or();
      expect(')');
      return inner;
    }
    return Formula{parse_compare()};
  }

  Compare parse_compare() {
    Compare cmp;
    cmp.lhs = parse_arith();
    skip_ws();
    if (peek('<')) {
      cmp.op = CompareOp::kLess;
    } else if (peek('>')) {
      cmp.op = CompareOp::kGreater;
    } else {
      fail(at_end() ? "expected comparison, got end of input"
                    : "expected '<' or '>'");
    }
    ++pos_;
    cmp.rhs = parse_arith();
    return cmp;
  }

  Arith parse_arith() {
    Arith a;
    a.first = parse_atom();
    while (true) {
      if (peek('+')) {
        ++pos_;
        a.rest.emplace_back(ArithOp::kPlus, parse_atom());
      } else if (peek('-')) {
        ++pos_;
        a.rest.emplace_back(ArithOp::kMinus, parse_atom());
      } else {
        break;
      }
    }
    return a;
  }

  Term parse_atom() {
    skip_ws();
    if (at_end()) fail("expected region reference or number, got end of input");
    const char c = text_[pos_];
    if (c == '[') return parse_ref();
    if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
    fail("expected region reference or number");
  }

  RegionRef parse_ref() {
    ++pos_;  // '['
    skip_ws();
    const std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    if (start == pos_) fail("expected region number");
    int region = 0;
    const auto digits = text_.substr(start, pos_ - start);
    const auto res =
        std::from_chars(digits.data(), digits.data() + digits.size(), region);
    if (res.ec != std::errc()) {
      pos_ = start;
      fail("region number out of range");
    }
    if (region < 1) {
      pos_ = start;
      fail("region number must be >= 1");
    }
    expect(';');
    skip_ws();
    if (at_end() || !is_ident_start(text_[pos_])) fail("expected condition name");
    const std::size_t name_start = pos_;
    while (!at_end() && is_ident_char(text_[pos_])) ++pos_;
    RegionRef ref{region, std::string(text_.substr(name_start, pos_ - name_start))};
    expect(']');
    return ref;
  }

  double parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      while (!at_end() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
    };
    digits();
    if (!at_end() && text_[pos_] == '.') {
      ++pos_;
      const std::size_t frac = pos_;
      digits();
      if (frac == pos_) fail("expected digits after '.'");
    }
    if (!at_end() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (!at_end() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      const std::size_t exp = pos_;
      digits();
      if (exp == pos_) fail("expected exponent digits");
    }
    double value = 0.0;
    const auto res =
        std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc() || !std::isfinite(value)) {
      pos_ = start;
      fail("invalid number");
    }
    return value;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void print_term(const Term& t, std::string& out) {
  if (const auto* ref = std::get_if<RegionRef>(&t)) {
    out += to_string(*ref);
  } else {
    out += format_double(std::get<double>(t));
  }
}

void print_arith(const Arith& a, std::string& out) {
  print_term(a.first, out);
  for (const auto& [op, term] : a.rest) {
    out += op == ArithOp::kPlus ? " + " : " - ";
    print_term(term, out);
  }
}

void print_formula(const Formula& f, std::string& out) {
  if (const auto* cmp = std::get_if<Compare>(&f.node)) {
    print_arith(cmp->lhs, out);
    out += cmp->op == CompareOp::kLess ? " < " : " > ";
    print_arith(cmp->rhs, out);
    return;
  }
  const auto& logical = std::get<Logical>(f.node);
  auto child = [&](const FormulaPtr& c) {
    if (std::holds_alternative<Logical>(c->node)) {
      out += "(";
      print_formula(*c, out);
      out += ")";
    } else {
      print_formula(*c, out);
    }
  };
  child(logical.lhs);
  out += logical.op == LogicOp::kAnd ? " & " : " | ";
  child(logical.rhs);
}

double eval_term(const Term& t, const SurprisalTable& table) {
  if (const auto* ref = std::get_if<RegionRef>(&t)) {
    const auto it = table.find(*ref);
    if (it == table.end())
      throw EvaluationError("no surprisal for atom " + to_string(*ref));
    return it->second;
  }
  return std::get<double>(t);
}

double eval_arith(const Arith& a, const SurprisalTable& table) {
  double v = eval_term(a.first, table);
  for (const auto& [op, term] : a.rest) {
    const double t = eval_term(term, table);
    v = op == ArithOp::kPlus ? v + t : v - t;
  }
  return v;
}

void collect(const Formula& f, std::vector<RegionRef>& out) {
  auto from_arith = [&](const Arith& a) {
    if (const auto* r = std::get_if<RegionRef>(&a.first)) out.push_back(*r);
    for (const auto& [op, term] : a.rest)
      if (const auto* r = std::get_if<RegionRef>(&term)) out.push_back(*r);
  };
  if (const auto* cmp = std::get_if<Compare>(&f.node)) {
    from_arith(cmp->lhs);
    from_arith(cmp->rhs);
    return;
  }
  const auto& logical = std::get<Logical>(f.node);
  collect(*logical.lhs, out);
  collect(*logical.rhs, out);
}

}  // namespace

Formula parse(std::string_view text) { return Parser(text).parse_all(); }

std::string pretty_print(const Formula& f) {
  std::string out;
  print_formula(f, out);
  return out;
}

bool evaluate(const Formula& f, const SurprisalTable& surprisals) {
  if (const auto* cmp = std::get_if<Compare>(&f.node)) {
    const double l = eval_arith(cmp->lhs, surprisals);
    const double r = eval_arith(cmp->rhs, surprisals);
    return cmp->op == CompareOp::kLess ? l < r : l > r;
  }
  const auto& logical = std::get<Logical>(f.node);
  // No short-circuit: a missing atom on either side is reported.
  const bool l = evaluate(*logical.lhs, surprisals);
  const bool r = evaluate(*logical.rhs, surprisals);
  return logical.op == LogicOp::kAnd ? (l && r) : (l || r);
}

std::vector<RegionRef> region_refs(const Formula& f) {
  std::vector<RegionRef> out;
  collect(f, out);
  return out;
}

}  // namespace ctxjudge::prediction
