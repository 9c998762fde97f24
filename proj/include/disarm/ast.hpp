#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "disarm/number.hpp"

namespace disarm {

/// Constant symbol such as `response_time` or an agent name.
struct Symbol {
  std::string name;
  friend auto operator<=>(const Symbol&, const Symbol&) = default;
};

/// Rule variable, written `?name`.
struct Variable {
  std::string name;
  friend auto operator<=>(const Variable&, const Variable&) = default;
};

using Term = std::variant<Symbol, Number, Variable>;

inline bool is_variable(const Term& t) { return std::holds_alternative<Variable>(t); }

/// Positional arguments are stored under their decimal index ("0", "1", ...)
/// and sort before named slots; named slots sort lexicographically. This is
/// the canonical argument order used for equality and serialization.
struct ArgKeyLess {
  static bool positional(const std::string& key) {
    return !key.empty() && std::all_of(key.begin(), key.end(), [](unsigned char c) { return std::isdigit(c); });
  }
  bool operator()(const std::string& a, const std::string& b) const {
    const bool pa = positional(a);
    const bool pb = positional(b);
    if (pa != pb) return pa;
    if (pa && a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

using ArgMap = std::map<std::string, Term, ArgKeyLess>;

enum class Polarity : std::uint8_t { positive, negated };

/// Atom with slotted (named) arguments and an optional strong negation.
struct Literal {
  Polarity polarity = Polarity::positive;
  std::string predicate;
  ArgMap args;

  bool negated() const { return polarity == Polarity::negated; }
  bool ground() const {
    return std::none_of(args.begin(), args.end(), [](const auto& kv) { return is_variable(kv.second); });
  }
  Literal complement() const {
    Literal out = *this;
    out.polarity = negated() ? Polarity::positive : Polarity::negated;
    return out;
  }

  friend bool operator==(const Literal&, const Literal&) = default;
  friend bool operator<(const Literal& a, const Literal& b) {
    if (a.predicate != b.predicate) return a.predicate < b.predicate;
    if (a.polarity != b.polarity) return a.polarity < b.polarity;
    return std::lexicographical_compare(a.args.begin(), a.args.end(), b.args.begin(), b.args.end(),
                                        [](const auto& x, const auto& y) {
                                          if (x.first != y.first) return ArgKeyLess{}(x.first, y.first);
                                          return x.second < y.second;
                                        });
  }
};

/// Arithmetic expression inside a builtin guard.
struct Expr {
  enum class Kind : std::uint8_t { term, now, add, sub, mul, div, neg };
  Kind kind = Kind::term;
  Term leaf;
  std::vector<Expr> operands;

  static Expr of(Term t) { return Expr{Kind::term, std::move(t), {}}; }
  static Expr clock() { return Expr{Kind::now, Symbol{}, {}}; }
  static Expr binary(Kind k, Expr a, Expr b) {
    Expr e{k, Symbol{}, {}};
    e.operands.push_back(std::move(a));
    e.operands.push_back(std::move(b));
    return e;
  }
  static Expr negate(Expr a) {
    Expr e{Kind::neg, Symbol{}, {}};
    e.operands.push_back(std::move(a));
    return e;
  }

  friend bool operator==(const Expr&, const Expr&) = default;
};

enum class CompareOp : std::uint8_t { lt, le, gt, ge, eq, ne };

/// `lhs op rhs`, or `?target is expr` when `assigns` is set.
struct Guard {
  bool assigns = false;
  CompareOp op = CompareOp::eq;
  Expr lhs;
  Expr rhs;
  std::string target;

  friend bool operator==(const Guard&, const Guard&) = default;
};

/// `not(L, guards...)`: holds iff no ground instance of L that satisfies
/// the guards is defeasibly provable.
struct NafBlock {
  Literal literal;
  std::vector<Guard> guards;
  friend bool operator==(const NafBlock&, const NafBlock&) = default;
};

using BodyElement = std::variant<Literal, NafBlock, Guard>;

enum class RuleKind : std::uint8_t { strict, defeasible, defeater };

struct Rule {
  std::string id;
  RuleKind kind = RuleKind::defeasible;
  Literal head;
  std::vector<BodyElement> body;
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct Superiority {
  std::string superior;
  std::string inferior;
  friend bool operator==(const Superiority&, const Superiority&) = default;
};

/// Literals matching any of `conflicts_with` (under the bindings produced by
/// matching `scope`, and satisfying `guards`) conflict with a literal
/// matching `scope`. Every ground literal also conflicts with its complement.
struct ConflictSetDecl {
  Literal scope;
  std::vector<Literal> conflicts_with;
  std::vector<Guard> guards;
  friend bool operator==(const ConflictSetDecl&, const ConflictSetDecl&) = default;
};

/// A parsed rule file (or several merged ones).
struct SourceProgram {
  std::vector<Literal> facts;
  std::vector<Rule> rules;
  std::vector<Superiority> superiorities;
  std::vector<ConflictSetDecl> conflicts;

  bool empty() const { return facts.empty() && rules.empty() && superiorities.empty() && conflicts.empty(); }

  void append(const SourceProgram& other) {
    facts.insert(facts.end(), other.facts.begin(), other.facts.end());
    rules.insert(rules.end(), other.rules.begin(), other.rules.end());
    superiorities.insert(superiorities.end(), other.superiorities.begin(), other.superiorities.end());
    conflicts.insert(conflicts.end(), other.conflicts.begin(), other.conflicts.end());
  }

  friend bool operator==(const SourceProgram&, const SourceProgram&) = default;
};

// Small construction helpers used throughout the library and tests.

inline Term sym(std::string name) { return Symbol{std::move(name)}; }
inline Term var(std::string name) { return Variable{std::move(name)}; }
inline Term num(Number n) { return n; }

inline Literal make_literal(std::string predicate, ArgMap args = {}, Polarity polarity = Polarity::positive) {
  return Literal{polarity, std::move(predicate), std::move(args)};
}

}  // namespace disarm
