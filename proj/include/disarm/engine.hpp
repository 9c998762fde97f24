#pragma once

// Bottom-up evaluator for defeasible theories.
//
// Semantics: ambiguity blocking without team defeat. A literal q is
//   +D  if it is a fact or a strict rule for q has a +D body;
//   -D  if it is not a fact and every strict rule for q has a -D body literal;
//   +d  if +D, or some strict/defeasible rule r for q has a +d body, every
//       literal conflicting with q is -D, and every rule s (any kind) for a
//       conflicting literal has a -d body literal or is beaten by r (r > s);
//   -d  if -D and for every strict/defeasible rule r for q: r has a -d body
//       literal, or a conflicting literal is +D, or some rule s for a
//       conflicting literal has a +d body and r does not beat s.
// Literals that can never be supported by facts through rule bodies are -D
// and -d. Literals caught in positive loops may end up in neither class.
//
// `not(L, guards)` holds iff no instance of L satisfying the guards is +d.
// Programs are evaluated stratum by stratum (predicate SCCs), so NAF only
// looks at finished strata; NAF inside a recursive cycle is rejected.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "disarm/ast.hpp"
#include "disarm/dposl.hpp"
#include "disarm/errors.hpp"

namespace disarm {

enum class Provability : std::uint8_t { definite_pos, definite_neg, defeasible_pos, defeasible_neg };

inline const char* tag_name(Provability p) {
  switch (p) {
    case Provability::definite_pos: return "+D";
    case Provability::definite_neg: return "-D";
    case Provability::defeasible_pos: return "+d";
    case Provability::defeasible_neg: return "-d";
  }
  return "?";
}

using Substitution = std::map<std::string, Term>;

struct ProvabilityTags {
  bool definite_pos = false;
  bool definite_neg = false;
  bool defeasible_pos = false;
  bool defeasible_neg = false;
  friend bool operator==(const ProvabilityTags&, const ProvabilityTags&) = default;
};

/// The four conclusion classes over the evaluated universe of ground
/// literals. Literals outside `universe` are not provable in either sense.
struct ConclusionSet {
  std::set<Literal> universe;
  std::set<Literal> definite_pos;
  std::set<Literal> definite_neg;
  std::set<Literal> defeasible_pos;
  std::set<Literal> defeasible_neg;

  ProvabilityTags tags(const Literal& lit) const {
    if (!universe.count(lit)) return {false, true, false, true};
    return {definite_pos.count(lit) > 0, definite_neg.count(lit) > 0, defeasible_pos.count(lit) > 0,
            defeasible_neg.count(lit) > 0};
  }
  bool provable(const Literal& lit) const { return defeasible_pos.count(lit) > 0; }

  friend bool operator==(const ConclusionSet&, const ConclusionSet&) = default;
};

struct QueryMatch {
  Substitution bindings;
  Literal literal;
  std::vector<Provability> tags;
  friend bool operator==(const QueryMatch&, const QueryMatch&) = default;
};

struct EvalOptions {
  /// Value returned by `now()`; evaluating `now()` without it is an error.
  std::optional<Number> now;
  /// When set, one line per ground rule instance: id, substitution, head, outcome.
  std::ostream* trace = nullptr;
};

struct BuiltinOutcome {
  enum class Status { holds, fails, error };
  Status status = Status::fails;
  std::string message;
};

/// Matches a (possibly non-ground) pattern against a ground literal using
/// slotted semantics: every pattern argument must be present in `ground`;
/// extra arguments of `ground` are ignored.
inline bool match_pattern(const Literal& pattern, const Literal& ground, Substitution& bindings) {
  if (pattern.predicate != ground.predicate || pattern.polarity != ground.polarity) return false;
  Substitution local = bindings;
  for (const auto& [key, term] : pattern.args) {
    auto it = ground.args.find(key);
    if (it == ground.args.end()) return false;
    if (const auto* v = std::get_if<Variable>(&term)) {
      auto [b, inserted] = local.emplace(v->name, it->second);
      if (!inserted && !(b->second == it->second)) return false;
    } else if (!(term == it->second)) {
      return false;
    }
  }
  bindings = std::move(local);
  return true;
}

namespace engine_detail {

using Id = std::uint32_t;

class Interner {
 public:
  Interner() = default;

  Id intern(const std::string& s) {
    if (auto found = find(s)) return *found;
    const Id id = offset_ + static_cast<Id>(names_.size());
    index_.emplace(s, id);
    names_.push_back(s);
    return id;
  }

  std::optional<Id> find(const std::string& s) const {
    if (base_)
      if (auto found = base_->find(s)) return found;
    auto it = index_.find(s);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& name(Id id) const {
    if (id < offset_) return base_->name(id);
    return names_[id - offset_];
  }

  /// Overlay that resolves existing names through `this` and allocates new ids locally.
  Interner fork() const {
    Interner child;
    child.base_ = this;
    child.offset_ = offset_ + static_cast<Id>(names_.size());
    return child;
  }

 private:
  const Interner* base_ = nullptr;
  Id offset_ = 0;
  std::unordered_map<std::string, Id> index_;
  std::vector<std::string> names_;
};

struct Value {
  Id symbol = 0;
  Number number;
  bool numeric = false;

  friend bool operator==(const Value& a, const Value& b) {
    return a.numeric == b.numeric && (a.numeric ? a.number == b.number : a.symbol == b.symbol);
  }
  std::size_t hash() const { return numeric ? number.hash() ^ 0x9e3779b97f4a7c15ull : std::hash<Id>{}(symbol); }
};

struct GroundLit {
  Id pred = 0;
  bool neg = false;
  std::vector<std::pair<Id, Value>> args;  // sorted by key id
  friend bool operator==(const GroundLit&, const GroundLit&) = default;
};

struct GroundLitHash {
  std::size_t operator()(const GroundLit& g) const {
    std::size_t h = std::hash<Id>{}(g.pred) * 2 + (g.neg ? 1 : 0);
    for (const auto& [k, v] : g.args) h = h * 1000003u ^ (std::hash<Id>{}(k) * 31u + v.hash());
    return h;
  }
};

inline std::uint64_t pred_key(Id pred, bool neg) { return (static_cast<std::uint64_t>(pred) << 1) | (neg ? 1u : 0u); }

struct PatArg {
  Id key = 0;
  bool is_var = false;
  Id slot = 0;
  Value constant;
};

struct Pattern {
  Id pred = 0;
  bool neg = false;
  std::vector<PatArg> args;  // sorted by key id
};

struct CExpr {
  Expr::Kind kind = Expr::Kind::term;
  bool is_var = false;
  Id slot = 0;
  Value constant;
  std::vector<CExpr> operands;
};

struct CGuard {
  bool assigns = false;
  CompareOp op = CompareOp::eq;
  CExpr lhs;
  CExpr rhs;
  Id target = 0;
  std::string text;
};

struct Binding {
  std::vector<Value> values;
  std::vector<char> bound;
  std::vector<Id> trail;

  explicit Binding(std::size_t slots = 0) : values(slots), bound(slots, 0) {}
  void bind(Id slot, const Value& v) {
    values[slot] = v;
    bound[slot] = 1;
    trail.push_back(slot);
  }
  std::size_t mark() const { return trail.size(); }
  void undo(std::size_t mark) {
    while (trail.size() > mark) {
      bound[trail.back()] = 0;
      trail.pop_back();
    }
  }
};

inline bool match(const Pattern& p, const GroundLit& g, Binding& b) {
  if (p.pred != g.pred || p.neg != g.neg) return false;
  std::size_t gi = 0;
  for (const auto& arg : p.args) {
    while (gi < g.args.size() && g.args[gi].first < arg.key) ++gi;
    if (gi == g.args.size() || g.args[gi].first != arg.key) return false;
    const Value& v = g.args[gi].second;
    if (arg.is_var) {
      if (b.bound[arg.slot]) {
        if (!(b.values[arg.slot] == v)) return false;
      } else {
        b.bind(arg.slot, v);
      }
    } else if (!(arg.constant == v)) {
      return false;
    }
  }
  return true;
}

struct Step {
  enum class Kind : std::uint8_t { literal, guard, naf };
  Kind kind;
  std::size_t index;
};

struct CNaf {
  Pattern literal;
  std::vector<CGuard> guards;
};

struct CompiledRule {
  std::string id;
  RuleKind kind = RuleKind::defeasible;
  Pattern head;
  std::vector<Pattern> literals;
  std::vector<CGuard> guards;
  std::vector<CNaf> nafs;
  std::vector<Step> plan;
  std::vector<std::string> slot_names;
  std::string head_predicate;
};

struct CConflict {
  Pattern scope;
  std::vector<Pattern> with;
  std::vector<CGuard> guards;
  std::size_t slots = 0;
};

}  // namespace engine_detail

namespace detail {

// AST-level evaluation shared by `evaluate_builtin`.
inline Term eval_expr(const Expr& e, const Substitution& s, const std::optional<Number>& now, const std::string& ctx) {
  switch (e.kind) {
    case Expr::Kind::term: {
      if (const auto* v = std::get_if<Variable>(&e.leaf)) {
        auto it = s.find(v->name);
        if (it == s.end()) throw EngineError("unbound variable ?" + v->name + " in '" + ctx + "'");
        return it->second;
      }
      return e.leaf;
    }
    case Expr::Kind::now:
      if (!now) throw EngineError("now() used without an injected clock in '" + ctx + "'");
      return *now;
    default: break;
  }
  auto numeric = [&](const Expr& operand) {
    Term t = eval_expr(operand, s, now, ctx);
    if (const auto* n = std::get_if<Number>(&t)) return *n;
    throw EngineError("non-numeric operand " + to_string(t) + " in '" + ctx + "'");
  };
  try {
    if (e.kind == Expr::Kind::neg) return -numeric(e.operands[0]);
    const Number a = numeric(e.operands[0]);
    const Number b = numeric(e.operands[1]);
    switch (e.kind) {
      case Expr::Kind::add: return a + b;
      case Expr::Kind::sub: return a - b;
      case Expr::Kind::mul: return a * b;
      default: return a / b;
    }
  } catch (const std::domain_error& err) {
    throw EngineError(std::string(err.what()) + " in '" + ctx + "'");
  } catch (const std::overflow_error& err) {
    throw EngineError(std::string(err.what()) + " in '" + ctx + "'");
  }
}

inline bool compare_terms(CompareOp op, const Term& a, const Term& b, const std::string& ctx) {
  if (op == CompareOp::eq) return a == b;
  if (op == CompareOp::ne) return !(a == b);
  const auto* x = std::get_if<Number>(&a);
  const auto* y = std::get_if<Number>(&b);
  if (!x || !y) throw EngineError("ordering comparison on non-numeric operand in '" + ctx + "'");
  switch (op) {
    case CompareOp::lt: return *x < *y;
    case CompareOp::le: return *x <= *y;
    case CompareOp::gt: return *x > *y;
    default: return *x >= *y;
  }
}

}  // namespace detail

/// Evaluates one builtin guard. For `?v is expr` with ?v unbound the
/// result is bound into `bindings`; with ?v bound it acts as an equality test.
inline BuiltinOutcome evaluate_builtin(const Guard& guard, Substitution& bindings, const std::optional<Number>& now = {}) {
  const std::string ctx = to_string(guard);
  try {
    if (guard.assigns) {
      Term value = detail::eval_expr(guard.rhs, bindings, now, ctx);
      auto it = bindings.find(guard.target);
      if (it == bindings.end()) {
        bindings.emplace(guard.target, std::move(value));
        return {BuiltinOutcome::Status::holds, {}};
      }
      return {it->second == value ? BuiltinOutcome::Status::holds : BuiltinOutcome::Status::fails, {}};
    }
    const Term lhs = detail::eval_expr(guard.lhs, bindings, now, ctx);
    const Term rhs = detail::eval_expr(guard.rhs, bindings, now, ctx);
    return {detail::compare_terms(guard.op, lhs, rhs, ctx) ? BuiltinOutcome::Status::holds : BuiltinOutcome::Status::fails,
            {}};
  } catch (const EngineError& err) {
    return {BuiltinOutcome::Status::error, err.what()};
  }
}

/// A compiled, validated theory. Construction performs the static checks
/// (acyclic superiority, range restriction, NAF stratification); `run`
/// evaluates the theory over a set of ground facts. Instances are immutable
/// after construction and `run` may be called concurrently.
class Engine {
 public:
  explicit Engine(SourceProgram theory) : theory_(std::move(theory)) {
    validate_program(theory_);
    compile();
    check_superiority();
    stratify();
  }

  const SourceProgram& theory() const { return theory_; }

  /// Predicates grouped by evaluation stratum, lowest first.
  std::vector<std::vector<std::string>> strata() const {
    std::vector<std::vector<std::string>> out;
    for (const auto& s : strata_) {
      std::vector<std::string> names;
      for (auto p : s.preds) names.push_back(symbols_.name(p));
      std::sort(names.begin(), names.end());
      out.push_back(std::move(names));
    }
    return out;
  }

  ConclusionSet run(const std::vector<Literal>& facts, const EvalOptions& options = {}) const;

  static std::vector<QueryMatch> query(const ConclusionSet& conclusions, const Literal& pattern) {
    std::map<Literal, QueryMatch> found;
    const std::pair<const std::set<Literal>*, Provability> classes[] = {
        {&conclusions.definite_pos, Provability::definite_pos},
        {&conclusions.definite_neg, Provability::definite_neg},
        {&conclusions.defeasible_pos, Provability::defeasible_pos},
        {&conclusions.defeasible_neg, Provability::defeasible_neg}};
    for (const auto& [set, tag] : classes) {
      for (const auto& lit : *set) {
        Substitution s;
        if (!match_pattern(pattern, lit, s)) continue;
        auto [it, inserted] = found.try_emplace(lit, QueryMatch{std::move(s), lit, {}});
        it->second.tags.push_back(tag);
      }
    }
    std::vector<QueryMatch> out;
    out.reserve(found.size());
    for (auto& [lit, m] : found) out.push_back(std::move(m));
    return out;
  }

 private:
  using Id = engine_detail::Id;

  struct Stratum {
    std::vector<Id> preds;
    std::vector<std::size_t> rules;
    std::vector<std::size_t> conflicts;
  };

  // ---- compilation -------------------------------------------------------

  struct SlotMap {
    std::map<std::string, Id> slots;
    std::vector<std::string> names;
    Id get(const std::string& v) {
      auto [it, inserted] = slots.emplace(v, static_cast<Id>(names.size()));
      if (inserted) names.push_back(v);
      return it->second;
    }
  };

  engine_detail::Value constant(const Term& t, engine_detail::Interner& in) const {
    engine_detail::Value v;
    if (const auto* n = std::get_if<Number>(&t)) {
      v.numeric = true;
      v.number = *n;
    } else {
      v.symbol = in.intern(std::get<Symbol>(t).name);
    }
    return v;
  }

  engine_detail::Pattern compile_pattern(const Literal& lit, SlotMap& slots) {
    engine_detail::Pattern p;
    p.pred = symbols_.intern(lit.predicate);
    p.neg = lit.negated();
    for (const auto& [key, term] : lit.args) {
      engine_detail::PatArg a;
      a.key = symbols_.intern(key);
      if (const auto* v = std::get_if<Variable>(&term)) {
        a.is_var = true;
        a.slot = slots.get(v->name);
      } else {
        a.constant = constant(term, symbols_);
      }
      p.args.push_back(a);
    }
    std::sort(p.args.begin(), p.args.end(), [](const auto& x, const auto& y) { return x.key < y.key; });
    return p;
  }

  engine_detail::CExpr compile_expr(const Expr& e, SlotMap& slots) {
    engine_detail::CExpr c;
    c.kind = e.kind;
    if (e.kind == Expr::Kind::term) {
      if (const auto* v = std::get_if<Variable>(&e.leaf)) {
        c.is_var = true;
        c.slot = slots.get(v->name);
      } else {
        c.constant = constant(e.leaf, symbols_);
      }
    }
    for (const auto& op : e.operands) c.operands.push_back(compile_expr(op, slots));
    return c;
  }

  engine_detail::CGuard compile_guard(const Guard& g, SlotMap& slots) {
    engine_detail::CGuard c;
    c.assigns = g.assigns;
    c.op = g.op;
    c.text = to_string(g);
    if (g.assigns) {
      c.target = slots.get(g.target);
    } else {
      c.lhs = compile_expr(g.lhs, slots);
    }
    c.rhs = compile_expr(g.rhs, slots);
    return c;
  }

  static void expr_vars(const Expr& e, std::set<std::string>& out) {
    if (e.kind == Expr::Kind::term)
      if (const auto* v = std::get_if<Variable>(&e.leaf)) out.insert(v->name);
    for (const auto& op : e.operands) expr_vars(op, out);
  }
  static std::set<std::string> guard_inputs(const Guard& g) {
    std::set<std::string> out;
    if (!g.assigns) expr_vars(g.lhs, out);
    expr_vars(g.rhs, out);
    return out;
  }
  static std::set<std::string> literal_vars(const Literal& l) {
    std::set<std::string> out;
    for (const auto& [k, t] : l.args)
      if (const auto* v = std::get_if<Variable>(&t)) out.insert(v->name);
    return out;
  }
  static bool subset(const std::set<std::string>& a, const std::set<std::string>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  }

  void compile() {
    for (const auto& rule : theory_.rules) {
      engine_detail::CompiledRule c;
      c.id = rule.id;
      c.kind = rule.kind;
      c.head_predicate = rule.head.predicate;
      SlotMap slots;
      std::set<std::string> bound;
      std::vector<std::size_t> pending_guards;
      std::vector<const Guard*> guards;
      std::vector<const NafBlock*> nafs;

      auto schedule_guards = [&]() {
        bool progress = true;
        while (progress) {
          progress = false;
          for (auto it = pending_guards.begin(); it != pending_guards.end();) {
            const Guard& g = *guards[*it];
            if (subset(guard_inputs(g), bound)) {
              c.plan.push_back({engine_detail::Step::Kind::guard, *it});
              if (g.assigns) bound.insert(g.target);
              it = pending_guards.erase(it);
              progress = true;
            } else {
              ++it;
            }
          }
        }
      };

      for (const auto& element : rule.body) {
        if (const auto* lit = std::get_if<Literal>(&element)) {
          c.plan.push_back({engine_detail::Step::Kind::literal, c.literals.size()});
          c.literals.push_back(compile_pattern(*lit, slots));
          const auto vars = literal_vars(*lit);
          bound.insert(vars.begin(), vars.end());
          schedule_guards();
        } else if (const auto* g = std::get_if<Guard>(&element)) {
          pending_guards.push_back(guards.size());
          guards.push_back(g);
          c.guards.push_back(compile_guard(*g, slots));
          schedule_guards();
        } else {
          nafs.push_back(&std::get<NafBlock>(element));
        }
      }
      schedule_guards();
      if (!pending_guards.empty()) {
        const Guard& g = *guards[pending_guards.front()];
        std::string missing;
        for (const auto& v : guard_inputs(g))
          if (!bound.count(v)) missing += " ?" + v;
        throw EngineError("rule " + rule.id + " is not range-restricted: guard '" + to_string(g) +
                          "' uses unbound variable(s)" + missing);
      }
      for (const auto* naf : nafs) {
        std::set<std::string> scope = bound;
        const auto local = literal_vars(naf->literal);
        scope.insert(local.begin(), local.end());
        for (const auto& g : naf->guards) {
          if (!subset(guard_inputs(g), scope))
            throw EngineError("rule " + rule.id + " is not range-restricted: guard '" + to_string(g) +
                              "' inside not(...) uses unbound variable(s)");
          if (g.assigns) scope.insert(g.target);
        }
        engine_detail::CNaf cn;
        cn.literal = compile_pattern(naf->literal, slots);
        for (const auto& g : naf->guards) cn.guards.push_back(compile_guard(g, slots));
        c.plan.push_back({engine_detail::Step::Kind::naf, c.nafs.size()});
        c.nafs.push_back(std::move(cn));
      }
      for (const auto& v : literal_vars(rule.head)) {
        if (!bound.count(v))
          throw EngineError("rule " + rule.id + " is not range-restricted: head variable ?" + v +
                            " does not occur in a positive body literal");
      }
      c.head = compile_pattern(rule.head, slots);
      c.slot_names = slots.names;
      rule_index_.emplace(rule.id, rules_.size());
      rules_.push_back(std::move(c));
    }

    for (const auto& decl : theory_.conflicts) {
      SlotMap slots;
      engine_detail::CConflict c;
      c.scope = compile_pattern(decl.scope, slots);
      const auto scope_vars = literal_vars(decl.scope);
      for (const auto& w : decl.conflicts_with) c.with.push_back(compile_pattern(w, slots));
      for (const auto& g : decl.guards) {
        if (g.assigns) throw EngineError("conflict declaration guards cannot bind variables: '" + to_string(g) + "'");
        for (const auto& w : decl.conflicts_with) {
          auto vars = scope_vars;
          const auto wv = literal_vars(w);
          vars.insert(wv.begin(), wv.end());
          if (!subset(guard_inputs(g), vars))
            throw EngineError("conflict declaration for " + decl.scope.predicate + ": guard '" + to_string(g) +
                              "' uses a variable not bound by the scope and by every conflicting pattern");
        }
        c.guards.push_back(compile_guard(g, slots));
      }
      c.slots = slots.names.size();
      conflicts_.push_back(std::move(c));
    }
  }

  void check_superiority() {
    const std::size_t n = rules_.size();
    superior_.assign(n, std::vector<char>(n, 0));
    std::vector<std::vector<std::size_t>> edges(n);
    for (const auto& s : theory_.superiorities) {
      const std::size_t a = rule_index_.at(s.superior);
      const std::size_t b = rule_index_.at(s.inferior);
      superior_[a][b] = 1;
      edges[a].push_back(b);
    }
    std::vector<int> color(n, 0);
    std::vector<std::size_t> stack;
    std::function<void(std::size_t)> visit = [&](std::size_t u) {
      color[u] = 1;
      stack.push_back(u);
      for (std::size_t v : edges[u]) {
        if (color[v] == 1) {
          std::string cycle;
          auto it = std::find(stack.begin(), stack.end(), v);
          for (; it != stack.end(); ++it) cycle += rules_[*it].id + " > ";
          throw EngineError("cyclic superiority relation: " + cycle + rules_[v].id);
        }
        if (color[v] == 0) visit(v);
      }
      stack.pop_back();
      color[u] = 2;
    };
    for (std::size_t u = 0; u < n; ++u)
      if (color[u] == 0) visit(u);
  }

  void stratify() {
    // Dependency graph over predicate names (both polarities share a node).
    std::map<Id, std::size_t> node;
    std::vector<Id> preds;
    auto add = [&](Id p) {
      auto [it, inserted] = node.emplace(p, preds.size());
      if (inserted) preds.push_back(p);
      return it->second;
    };
    struct Edge {
      std::size_t from, to;
      bool negative;
    };
    std::vector<Edge> edges;
    for (const auto& r : rules_) {
      const std::size_t h = add(r.head.pred);
      for (const auto& l : r.literals) edges.push_back({add(l.pred), h, false});
      for (const auto& n : r.nafs) edges.push_back({add(n.literal.pred), h, true});
    }
    for (const auto& f : theory_.facts) add(symbols_.intern(f.predicate));
    for (const auto& c : conflicts_) {
      const std::size_t s = add(c.scope.pred);
      for (const auto& w : c.with) {
        const std::size_t t = add(w.pred);
        edges.push_back({s, t, false});
        edges.push_back({t, s, false});
      }
    }
    const std::size_t n = preds.size();
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& e : edges) adj[e.from].push_back(e.to);

    // Tarjan's SCC.
    std::vector<int> index(n, -1), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack, comp(n);
    std::size_t counter = 0, comps = 0;
    std::function<void(std::size_t)> strong = [&](std::size_t v) {
      index[v] = low[v] = static_cast<int>(counter++);
      stack.push_back(v);
      on_stack[v] = 1;
      for (std::size_t w : adj[v]) {
        if (index[w] < 0) {
          strong(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        for (;;) {
          const std::size_t w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = comps;
          if (w == v) break;
        }
        ++comps;
      }
    };
    for (std::size_t v = 0; v < n; ++v)
      if (index[v] < 0) strong(v);

    for (const auto& e : edges) {
      if (e.negative && comp[e.from] == comp[e.to])
        throw EngineError("program is not stratified: not(" + symbols_.name(preds[e.from]) +
                          ") occurs in a recursive cycle with " + symbols_.name(preds[e.to]));
    }

    // Kahn's algorithm over the condensation; ties broken by component id for determinism.
    std::vector<std::set<std::size_t>> succ(comps);
    std::vector<std::size_t> indeg(comps, 0);
    for (const auto& e : edges) {
      const std::size_t a = comp[e.from], b = comp[e.to];
      if (a != b && succ[a].insert(b).second) ++indeg[b];
    }
    std::set<std::size_t> ready;
    for (std::size_t c = 0; c < comps; ++c)
      if (indeg[c] == 0) ready.insert(c);
    std::vector<std::size_t> order;
    while (!ready.empty()) {
      const std::size_t c = *ready.begin();
      ready.erase(ready.begin());
      order.push_back(c);
      for (std::size_t d : succ[c])
        if (--indeg[d] == 0) ready.insert(d);
    }
    std::vector<std::size_t> position(comps);
    for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
    strata_.assign(comps, {});
    for (std::size_t v = 0; v < n; ++v) {
      strata_[position[comp[v]]].preds.push_back(preds[v]);
      stratum_of_.emplace(preds[v], position[comp[v]]);
    }
    for (std::size_t r = 0; r < rules_.size(); ++r) strata_[stratum_of_.at(rules_[r].head.pred)].rules.push_back(r);
    for (std::size_t c = 0; c < conflicts_.size(); ++c)
      strata_[stratum_of_.at(conflicts_[c].scope.pred)].conflicts.push_back(c);
  }

  SourceProgram theory_;
  engine_detail::Interner symbols_;
  std::vector<engine_detail::CompiledRule> rules_;
  std::unordered_map<std::string, std::size_t> rule_index_;
  std::vector<engine_detail::CConflict> conflicts_;
  std::vector<std::vector<char>> superior_;
  std::vector<Stratum> strata_;
  std::unordered_map<Id, std::size_t> stratum_of_;

  class Run;
};

// ---- evaluation ------------------------------------------------------------

class Engine::Run {
 public:
  using Value = engine_detail::Value;
  using GroundLit = engine_detail::GroundLit;

  enum Status : std::uint8_t { unknown = 0, pos = 1, neg = 2 };

  struct Instance {
    std::size_t rule;
    Id head;
    std::vector<Id> body;
    std::vector<Value> binding;
  };

  Run(const Engine& engine, const EvalOptions& options)
      : engine_(engine), options_(options), symbols_(engine.symbols_.fork()) {}

  ConclusionSet execute(const std::vector<Literal>& facts) {
    std::vector<Id> fact_ids;
    auto add_fact = [&](const Literal& f) {
      if (!f.ground()) throw EngineError("fact " + to_string(f) + " contains a variable");
      fact_ids.push_back(intern(to_ground(f)));
    };
    for (const auto& f : engine_.theory_.facts) add_fact(f);
    for (const auto& f : facts) add_fact(f);
    for (Id id : fact_ids) is_fact_[id] = 1;

    // Facts whose predicate the program never mentions form their own first stratum.
    std::vector<Id> extensional;
    std::vector<Id> extensional_preds;
    for (Id id : fact_ids) {
      const Id p = lits_[id].pred;
      if (!engine_.stratum_of_.count(p)) {
        extensional.push_back(id);
        if (std::find(extensional_preds.begin(), extensional_preds.end(), p) == extensional_preds.end())
          extensional_preds.push_back(p);
      }
    }
    if (!extensional.empty()) evaluate_stratum(extensional_preds, {}, {}, fact_ids);
    for (const auto& s : engine_.strata_) evaluate_stratum(s.preds, s.rules, s.conflicts, fact_ids);
    return collect();
  }

 private:
  // ---- literal table -------------------------------------------------------

  Id intern(GroundLit&& g) {
    auto it = index_.find(g);
    if (it != index_.end()) return it->second;
    const Id id = static_cast<Id>(lits_.size());
    index_.emplace(g, id);
    lits_.push_back(std::move(g));
    is_fact_.push_back(0);
    in_universe_.push_back(0);
    delta_.push_back(unknown);
    partial_.push_back(unknown);
    instances_for_.emplace_back();
    return id;
  }

  GroundLit to_ground(const Literal& lit) {
    GroundLit g;
    g.pred = symbols_.intern(lit.predicate);
    g.neg = lit.negated();
    for (const auto& [key, term] : lit.args) {
      Value v;
      if (const auto* n = std::get_if<Number>(&term)) {
        v.numeric = true;
        v.number = *n;
      } else {
        v.symbol = symbols_.intern(std::get<Symbol>(term).name);
      }
      g.args.emplace_back(symbols_.intern(key), v);
    }
    std::sort(g.args.begin(), g.args.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    return g;
  }

  Term to_term(const Value& v) const {
    if (v.numeric) return v.number;
    return Symbol{symbols_.name(v.symbol)};
  }

  Literal to_literal(const GroundLit& g) const {
    Literal lit;
    lit.predicate = symbols_.name(g.pred);
    lit.polarity = g.neg ? Polarity::negated : Polarity::positive;
    for (const auto& [k, v] : g.args) lit.args.emplace(symbols_.name(k), to_term(v));
    return lit;
  }

  Id complement(Id id) {
    GroundLit c = lits_[id];
    c.neg = !c.neg;
    return intern(std::move(c));
  }

  void add_to_universe(Id id) {
    if (in_universe_[id]) return;
    in_universe_[id] = 1;
    by_pred_[engine_detail::pred_key(lits_[id].pred, lits_[id].neg)].push_back(id);
  }

  const std::vector<Id>& candidates(const engine_detail::Pattern& p) const {
    static const std::vector<Id> none;
    auto it = by_pred_.find(engine_detail::pred_key(p.pred, p.neg));
    return it == by_pred_.end() ? none : it->second;
  }

  // ---- builtins ------------------------------------------------------------

  Value eval(const engine_detail::CExpr& e, const engine_detail::Binding& b, const std::string& ctx) const {
    switch (e.kind) {
      case Expr::Kind::term:
        if (e.is_var) {
          if (!b.bound[e.slot]) throw EngineError("unbound variable in '" + ctx + "'");
          return b.values[e.slot];
        }
        return e.constant;
      case Expr::Kind::now: {
        if (!options_.now) throw EngineError("now() used without an injected clock in '" + ctx + "'");
        Value v;
        v.numeric = true;
        v.number = *options_.now;
        return v;
      }
      default: break;
    }
    auto numeric = [&](const engine_detail::CExpr& operand) {
      const Value v = eval(operand, b, ctx);
      if (!v.numeric) throw EngineError("non-numeric operand " + symbols_.name(v.symbol) + " in '" + ctx + "'");
      return v.number;
    };
    Value out;
    out.numeric = true;
    try {
      if (e.kind == Expr::Kind::neg) {
        out.number = -numeric(e.operands[0]);
        return out;
      }
      const Number x = numeric(e.operands[0]);
      const Number y = numeric(e.operands[1]);
      switch (e.kind) {
        case Expr::Kind::add: out.number = x + y; break;
        case Expr::Kind::sub: out.number = x - y; break;
        case Expr::Kind::mul: out.number = x * y; break;
        default: out.number = x / y; break;
      }
    } catch (const std::domain_error& err) {
      throw EngineError(std::string(err.what()) + " in '" + ctx + "'");
    } catch (const std::overflow_error& err) {
      throw EngineError(std::string(err.what()) + " in '" + ctx + "'");
    }
    return out;
  }

  bool check(const engine_detail::CGuard& g, engine_detail::Binding& b) const {
    const Value rhs = eval(g.rhs, b, g.text);
    if (g.assigns) {
      if (!b.bound[g.target]) {
        b.bind(g.target, rhs);
        return true;
      }
      return b.values[g.target] == rhs;
    }
    const Value lhs = eval(g.lhs, b, g.text);
    if (g.op == CompareOp::eq) return lhs == rhs;
    if (g.op == CompareOp::ne) return !(lhs == rhs);
    if (!lhs.numeric || !rhs.numeric) throw EngineError("ordering comparison on non-numeric operand in '" + g.text + "'");
    switch (g.op) {
      case CompareOp::lt: return lhs.number < rhs.number;
      case CompareOp::le: return lhs.number <= rhs.number;
      case CompareOp::gt: return lhs.number > rhs.number;
      default: return lhs.number >= rhs.number;
    }
  }

  bool naf_holds(const engine_detail::CNaf& naf, engine_detail::Binding& b) const {
    for (Id id : candidates(naf.literal)) {
      if (partial_[id] != pos) continue;
      const std::size_t mark = b.mark();
      bool found = engine_detail::match(naf.literal, lits_[id], b);
      for (std::size_t g = 0; found && g < naf.guards.size(); ++g) found = check(naf.guards[g], b);
      b.undo(mark);
      if (found) return false;
    }
    return true;
  }

  // ---- grounding -----------------------------------------------------------

  struct BodyKeyHash {
    std::size_t operator()(const std::vector<Id>& v) const {
      std::size_t h = v.size();
      for (Id x : v) h = h * 1000003u ^ x;
      return h;
    }
  };

  void ground_rule(std::size_t rule_index, std::size_t step, engine_detail::Binding& b, std::vector<Id>& body,
                   std::vector<Id>& new_heads) {
    const auto& rule = engine_.rules_[rule_index];
    if (step == rule.plan.size()) {
      std::vector<Id> key;
      key.reserve(body.size() + 1);
      key.push_back(static_cast<Id>(rule_index));
      key.insert(key.end(), body.begin(), body.end());
      if (!seen_instances_.insert(std::move(key)).second) return;
      GroundLit head;
      head.pred = rule.head.pred;
      head.neg = rule.head.neg;
      for (const auto& a : rule.head.args) head.args.emplace_back(a.key, a.is_var ? b.values[a.slot] : a.constant);
      const Id h = intern(std::move(head));
      Instance inst{rule_index, h, body, {}};
      if (options_.trace) inst.binding = b.values;
      instances_for_[h].push_back(instances_.size());
      instances_.push_back(std::move(inst));
      if (!in_universe_[h]) new_heads.push_back(h);
      return;
    }
    const auto& s = rule.plan[step];
    switch (s.kind) {
      case engine_detail::Step::Kind::literal: {
        const auto& pattern = rule.literals[s.index];
        const auto& cands = candidates(pattern);
        const std::size_t count = cands.size();
        for (std::size_t i = 0; i < count; ++i) {
          const Id id = candidates(pattern)[i];
          const std::size_t mark = b.mark();
          if (engine_detail::match(pattern, lits_[id], b)) {
            body.push_back(id);
            ground_rule(rule_index, step + 1, b, body, new_heads);
            body.pop_back();
          }
          b.undo(mark);
        }
        return;
      }
      case engine_detail::Step::Kind::guard: {
        const std::size_t mark = b.mark();
        if (check(rule.guards[s.index], b)) ground_rule(rule_index, step + 1, b, body, new_heads);
        b.undo(mark);
        return;
      }
      case engine_detail::Step::Kind::naf:
        if (naf_holds(rule.nafs[s.index], b)) ground_rule(rule_index, step + 1, b, body, new_heads);
        return;
    }
  }

  // ---- per-stratum proof ---------------------------------------------------

  void evaluate_stratum(const std::vector<Id>& preds, const std::vector<std::size_t>& rules,
                        const std::vector<std::size_t>& conflict_decls, const std::vector<Id>& fact_ids) {
    std::unordered_set<Id> pred_set(preds.begin(), preds.end());
    std::vector<Id> members;
    for (Id id : fact_ids) {
      if (pred_set.count(lits_[id].pred) && !in_universe_[id]) {
        add_to_universe(id);
        members.push_back(id);
      }
    }

    bool changed = !rules.empty();
    while (changed) {
      std::vector<Id> new_heads;
      for (std::size_t r : rules) {
        engine_detail::Binding b(engine_.rules_[r].slot_names.size());
        std::vector<Id> body;
        ground_rule(r, 0, b, body, new_heads);
      }
      changed = false;
      for (Id h : new_heads) {
        if (!in_universe_[h]) {
          add_to_universe(h);
          members.push_back(h);
          changed = true;
        }
      }
    }

    // Evaluated literals: the stratum universe and the complements of its members.
    std::vector<Id> evaluated = members;
    const std::size_t n_members = members.size();
    for (std::size_t i = 0; i < n_members; ++i) {
      const Id c = complement(members[i]);
      if (!in_universe_[c] && !in_evaluated_.count(c)) evaluated.push_back(c);
    }
    for (Id id : evaluated) in_evaluated_.insert(id);

    std::unordered_map<Id, std::vector<Id>> conflicts;
    for (Id q : evaluated) {
      std::vector<Id>& cs = conflicts[q];
      cs.push_back(complement(q));
      for (std::size_t d : conflict_decls) {
        const auto& decl = engine_.conflicts_[d];
        engine_detail::Binding b(decl.slots);
        if (!engine_detail::match(decl.scope, lits_[q], b)) continue;
        for (const auto& w : decl.with) {
          for (Id c : candidates(w)) {
            if (c == q) continue;
            const std::size_t mark = b.mark();
            bool ok = engine_detail::match(w, lits_[c], b);
            for (std::size_t g = 0; ok && g < decl.guards.size(); ++g) ok = check(decl.guards[g], b);
            b.undo(mark);
            if (ok && std::find(cs.begin(), cs.end(), c) == cs.end()) cs.push_back(c);
          }
        }
      }
    }

    auto rule_of = [&](std::size_t inst) -> const engine_detail::CompiledRule& {
      return engine_.rules_[instances_[inst].rule];
    };
    auto supports = [&](std::size_t inst) { return rule_of(inst).kind != RuleKind::defeater; };

    // Definite provability.
    for (bool progress = true; progress;) {
      progress = false;
      for (Id q : evaluated) {
        if (delta_[q] != unknown) continue;
        if (is_fact_[q]) {
          delta_[q] = pos;
          progress = true;
          continue;
        }
        bool proved = false, refuted = true;
        for (std::size_t i : instances_for_[q]) {
          if (rule_of(i).kind != RuleKind::strict) continue;
          bool all_pos = true, some_neg = false;
          for (Id a : instances_[i].body) {
            all_pos = all_pos && delta_[a] == pos;
            some_neg = some_neg || delta_[a] == neg;
          }
          if (all_pos) proved = true;
          if (!some_neg) refuted = false;
        }
        if (proved) {
          delta_[q] = pos;
          progress = true;
        } else if (refuted) {
          delta_[q] = neg;
          progress = true;
        }
      }
    }

    // Defeasible provability.
    auto body_all_pos = [&](std::size_t i) {
      for (Id a : instances_[i].body)
        if (partial_[a] != pos) return false;
      return true;
    };
    auto body_some_neg = [&](std::size_t i) {
      for (Id a : instances_[i].body)
        if (partial_[a] == neg) return true;
      return false;
    };
    for (bool progress = true; progress;) {
      progress = false;
      for (Id q : evaluated) {
        if (partial_[q] != unknown) continue;
        if (delta_[q] == pos) {
          partial_[q] = pos;
          progress = true;
          continue;
        }
        const auto& cs = conflicts[q];
        bool conflicts_refuted = true, conflict_definite = false;
        for (Id c : cs) {
          conflicts_refuted = conflicts_refuted && delta_[c] == neg;
          conflict_definite = conflict_definite || delta_[c] == pos;
        }
        if (conflicts_refuted) {
          for (std::size_t r : instances_for_[q]) {
            if (!supports(r) || !body_all_pos(r)) continue;
            bool beats_all = true;
            for (Id c : cs) {
              for (std::size_t s : instances_for_[c]) {
                if (body_some_neg(s)) continue;
                if (engine_.superior_[instances_[r].rule][instances_[s].rule]) continue;
                beats_all = false;
                break;
              }
              if (!beats_all) break;
            }
            if (beats_all) {
              partial_[q] = pos;
              progress = true;
              break;
            }
          }
        }
        if (partial_[q] != unknown || delta_[q] != neg) continue;
        bool refuted = true;
        for (std::size_t r : instances_for_[q]) {
          if (!supports(r)) continue;
          if (body_some_neg(r) || conflict_definite) continue;
          bool overridden = false;
          for (Id c : cs) {
            for (std::size_t s : instances_for_[c]) {
              if (body_all_pos(s) && !engine_.superior_[instances_[r].rule][instances_[s].rule]) {
                overridden = true;
                break;
              }
            }
            if (overridden) break;
          }
          if (!overridden) {
            refuted = false;
            break;
          }
        }
        if (refuted) {
          partial_[q] = neg;
          progress = true;
        }
      }
    }

    evaluated_.insert(evaluated_.end(), evaluated.begin(), evaluated.end());
  }

  ConclusionSet collect() {
    ConclusionSet out;
    for (Id id : evaluated_) {
      Literal lit = to_literal(lits_[id]);
      if (delta_[id] == pos) out.definite_pos.insert(lit);
      if (delta_[id] == neg) out.definite_neg.insert(lit);
      if (partial_[id] == pos) out.defeasible_pos.insert(lit);
      if (partial_[id] == neg) out.defeasible_neg.insert(lit);
      out.universe.insert(std::move(lit));
    }
    if (options_.trace) {
      for (const auto& inst : instances_) {
        const auto& rule = engine_.rules_[inst.rule];
        std::ostream& os = *options_.trace;
        os << rule.id << " {";
        bool first = true;
        for (std::size_t s = 0; s < rule.slot_names.size() && s < inst.binding.size(); ++s) {
          if (!first) os << ", ";
          first = false;
          os << '?' << rule.slot_names[s] << '=' << to_string(to_term(inst.binding[s]));
        }
        const char* outcome = partial_[inst.head] == pos ? "+d" : partial_[inst.head] == neg ? "-d" : "undecided";
        os << "} " << to_string(to_literal(lits_[inst.head])) << ' ' << outcome << '\n';
      }
    }
    return out;
  }

  const Engine& engine_;
  const EvalOptions& options_;
  engine_detail::Interner symbols_;
  std::vector<GroundLit> lits_;
  std::unordered_map<GroundLit, Id, engine_detail::GroundLitHash> index_;
  std::vector<char> is_fact_;
  std::vector<char> in_universe_;
  std::vector<Status> delta_;
  std::vector<Status> partial_;
  std::vector<std::vector<std::size_t>> instances_for_;
  std::vector<Instance> instances_;
  std::unordered_set<std::vector<Id>, BodyKeyHash> seen_instances_;
  std::unordered_map<std::uint64_t, std::vector<Id>> by_pred_;
  std::unordered_set<Id> in_evaluated_;
  std::vector<Id> evaluated_;
};

inline ConclusionSet Engine::run(const std::vector<Literal>& facts, const EvalOptions& options) const {
  Run run(*this, options);
  return run.execute(facts);
}

/// Evaluates `theory` over `facts`.
inline ConclusionSet run(const SourceProgram& theory, const std::vector<Literal>& facts, const EvalOptions& options = {}) {
  return Engine(theory).run(facts, options);
}

/// All evaluated ground instances of `pattern`, each with its provability
/// tags, sorted by literal.
inline std::vector<QueryMatch> query(const SourceProgram& theory, const std::vector<Literal>& facts,
                                     const Literal& pattern, const EvalOptions& options = {}) {
  return Engine::query(run(theory, facts, options), pattern);
}

}  // namespace disarm
