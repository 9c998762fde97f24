#include <gtest/gtest.h>

#include <sstream>

#include "disarm/dposl.hpp"
#include "disarm/engine.hpp"

using namespace disarm;

namespace {

Literal L(const char* text) { return parse_pattern(text); }

ConclusionSet eval(const char* program, std::vector<Literal> facts = {}, EvalOptions options = {}) {
  return run(parse_program(program), facts, options);
}

}  // namespace

TEST(Engine, StrictChaining) {
  const auto c = eval("a. r1: b :- a.");
  EXPECT_TRUE(c.definite_pos.count(L("b")));
  EXPECT_TRUE(c.defeasible_pos.count(L("b")));
  EXPECT_TRUE(c.definite_neg.count(L("~b")));
}

TEST(Engine, SuperiorityResolvesConflict) {
  const auto c = eval("a. c. r1: b := a. r2: ~b := c. r1 > r2.");
  EXPECT_TRUE(c.defeasible_pos.count(L("b")));
  EXPECT_FALSE(c.defeasible_neg.count(L("b")));
  EXPECT_TRUE(c.defeasible_neg.count(L("~b")));
  EXPECT_FALSE(c.definite_pos.count(L("b")));
}

TEST(Engine, UnresolvedConflictBlocksBoth) {
  const auto c = eval("a. c. r1: b := a. r2: ~b := c.");
  EXPECT_TRUE(c.defeasible_neg.count(L("b")));
  EXPECT_TRUE(c.defeasible_neg.count(L("~b")));
}

TEST(Engine, DefeaterBlocksWithoutConcluding) {
  const auto c = eval("a. c. r1: b := a. r2: ~b :~ c.");
  EXPECT_FALSE(c.defeasible_pos.count(L("b")));
  EXPECT_FALSE(c.definite_pos.count(L("b")));
  EXPECT_FALSE(c.defeasible_pos.count(L("~b")));
}

TEST(Engine, BeatenDefeaterDoesNotBlock) {
  const auto c = eval("a. c. r1: b := a. r2: ~b :~ c. r1 > r2.");
  EXPECT_TRUE(c.defeasible_pos.count(L("b")));
}

TEST(Engine, NoTeamDefeat) {
  // r1 beats r3 and r2 beats r4, but no single rule for b beats both attackers.
  const auto c = eval("a. r1: b := a. r2: b := a. r3: ~b := a. r4: ~b := a. r1 > r3. r2 > r4.");
  EXPECT_FALSE(c.defeasible_pos.count(L("b")));
  EXPECT_TRUE(c.defeasible_neg.count(L("b")));
}

TEST(Engine, DefiniteConflictOverridesDefeasibleRule) {
  const auto c = eval("a. ~b. r1: b := a.");
  EXPECT_TRUE(c.defeasible_pos.count(L("~b")));
  EXPECT_TRUE(c.defeasible_neg.count(L("b")));
}

TEST(Engine, ConflictDeclarationWithGuard) {
  const char* program =
      "q(x->1). q(x->2). r1: p(x->?v) := q(x->?v). "
      "conflict p(x->?a) with p(x->?b) where ?a != ?b.";
  const auto c = eval(program);
  EXPECT_FALSE(c.defeasible_pos.count(L("p(x->1)")));
  EXPECT_FALSE(c.defeasible_pos.count(L("p(x->2)")));
}

TEST(Engine, NegationAsFailure) {
  const char* program = "q(a). q(b). s(a). r1: p(?x) :- q(?x), not(s(?x)).";
  const auto c = eval(program);
  EXPECT_TRUE(c.definite_pos.count(L("p(b)")));
  EXPECT_FALSE(c.defeasible_pos.count(L("p(a)")));
  EXPECT_TRUE(c.tags(L("p(a)")).defeasible_neg);
}

TEST(Engine, NafGuardsRestrictTheWitness) {
  const char* program =
      "w(x->k, time->1). nw(x->k, time->0). "
      "r1: cur(x->?x) := w(x->?x, time->?t1), not(nw(x->?x, time->?t2), ?t2 > ?t1).";
  EXPECT_TRUE(eval(program).defeasible_pos.count(L("cur(x->k)")));
  EXPECT_FALSE(eval(program, {L("nw(x->k, time->2)")}).defeasible_pos.count(L("cur(x->k)")));
}

TEST(Engine, ArithmeticBindsVariables) {
  const auto c = eval("g(t->3). r1: f(t->?t1) := g(t->?t), ?t > 0, ?t1 is ?t - 1.");
  EXPECT_TRUE(c.defeasible_pos.count(L("f(t->2)")));
}

TEST(Engine, ExactDecimalComparison) {
  const auto c = eval("v(0.3). r1: ok :- v(?x), ?x = 0.1 + 0.2.");
  EXPECT_TRUE(c.definite_pos.count(L("ok")));
}

TEST(Engine, ClockIsInjected) {
  const char* program = "w(10). r(t->140). r1: fresh(t->?t) := w(?w), r(t->?t), now() - ?w <= ?t.";
  EvalOptions at150;
  at150.now = Number(150);
  EXPECT_TRUE(eval(program, {}, at150).defeasible_pos.count(L("fresh(t->140)")));
  EvalOptions at151;
  at151.now = Number(151);
  EXPECT_FALSE(eval(program, {}, at151).defeasible_pos.count(L("fresh(t->140)")));
  EXPECT_THROW(eval(program), EngineError);
}

TEST(Engine, RecursionReachesFixpoint) {
  const char* program =
      "e(a, b). e(b, c). e(c, d). "
      "r1: path(?x, ?y) :- e(?x, ?y). r2: path(?x, ?z) :- path(?x, ?y), e(?y, ?z).";
  const auto c = eval(program);
  EXPECT_TRUE(c.definite_pos.count(L("path(a, d)")));
  EXPECT_FALSE(c.universe.count(L("path(d, a)")));
  EXPECT_TRUE(c.tags(L("path(d, a)")).definite_neg);
}

TEST(Engine, PositiveLoopWithoutSupportIsRefuted) {
  const auto c = eval("r1: p :- p.");
  EXPECT_TRUE(c.tags(L("p")).defeasible_neg);
}

TEST(Engine, SupportedLoopThroughConflictIsUndecided) {
  // p can only be proved if its own rule is blocked by p itself.
  const auto c = eval("a. r1: p := a. r2: ~p :~ p.");
  const auto tags = c.tags(L("p"));
  EXPECT_FALSE(tags.defeasible_pos);
  EXPECT_FALSE(tags.defeasible_neg);
}

TEST(Engine, SlottedMatchingIgnoresExtraArguments) {
  const auto c = eval("rating(id->1, truster->a, trustee->x, time->3). r1: seen(?y) :- rating(trustee->?y).");
  EXPECT_TRUE(c.definite_pos.count(L("seen(x)")));
}

TEST(Engine, RejectsCyclicSuperiority) {
  try {
    Engine e(parse_program("r1: a := b. r2: ~a := b. r3: c := b. r1 > r2. r2 > r3. r3 > r1."));
    FAIL();
  } catch (const EngineError& err) {
    EXPECT_NE(std::string(err.what()).find("r1 > r2 > r3 > r1"), std::string::npos) << err.what();
  }
}

TEST(Engine, RejectsNonRangeRestrictedRules) {
  EXPECT_THROW(Engine(parse_program("r1: p(?x) :- q(?y).")), EngineError);
  EXPECT_THROW(Engine(parse_program("r1: p(?y) :- q(?y), ?z > 1.")), EngineError);
  EXPECT_THROW(Engine(parse_program("r1: p(?y) :- q(?y), not(s(?y), ?w > 1).")), EngineError);
}

TEST(Engine, NafLocalVariablesAreExistential) {
  const auto c = eval("q(a). s(b). r1: p(?y) :- q(?y), not(s(?z)).");
  EXPECT_FALSE(c.defeasible_pos.count(L("p(a)")));
}

TEST(Engine, RejectsUnstratifiedNegation) {
  EXPECT_THROW(Engine(parse_program("r1: p :- q, not(r). r2: r :- p.")), EngineError);
  EXPECT_THROW(Engine(parse_program("r1: p :- not(p).")), EngineError);
  EXPECT_NO_THROW(Engine(parse_program("r1: p :- q, not(r). r2: r :- s.")));
}

TEST(Engine, RuntimeBuiltinErrorsPropagate) {
  EXPECT_THROW(eval("v(a). r1: ok :- v(?x), ?x < 3."), EngineError);
  EXPECT_THROW(eval("v(0). r1: ok :- v(?x), ?y is 1 / ?x."), EngineError);
}

TEST(Engine, FactsMustBeGround) {
  Literal lit = L("p(?x)");
  EXPECT_THROW(eval("r1: q :- p(a).", {lit}), EngineError);
}

TEST(Engine, FactsForUnknownPredicates) {
  const auto c = eval("r1: q :- p.", {L("z(1)"), L("~z(2)")});
  EXPECT_TRUE(c.definite_pos.count(L("z(1)")));
  EXPECT_TRUE(c.definite_neg.count(L("~z(1)")));
  EXPECT_TRUE(c.definite_pos.count(L("~z(2)")));
}

TEST(Engine, TraceHasOneLinePerInstance) {
  std::ostringstream trace;
  EvalOptions options;
  options.trace = &trace;
  eval("q(a). q(b). r1: p(?x) := q(?x).", {}, options);
  EXPECT_EQ(trace.str(), "r1 {?x=a} p(a) +d\nr1 {?x=b} p(b) +d\n");
}

TEST(Query, ReturnsSubstitutionsWithTags) {
  const char* program = "whitelist(trustee->b). whitelist(trustee->c). r16: WL(trustee->?x) := whitelist(trustee->?x).";
  const auto matches = query(parse_program(program), {}, L("WL(trustee->?x)"));
  ASSERT_EQ(matches.size(), 2u);
  EXPECT_EQ(matches[0].bindings.at("x"), sym("b"));
  EXPECT_EQ(matches[1].bindings.at("x"), sym("c"));
  EXPECT_EQ(matches[0].tags, (std::vector<Provability>{Provability::definite_neg, Provability::defeasible_pos}));
}

TEST(Query, NoMatchesIsEmpty) {
  EXPECT_TRUE(query(parse_program("a."), {}, L("WL(trustee->?x)")).empty());
}

TEST(Builtin, AssignmentBindsTarget) {
  Substitution s;
  const auto g = std::get<Guard>(parse_program("r: a :- b, ?t1 is 3 - 1.").rules[0].body[1]);
  EXPECT_EQ(evaluate_builtin(g, s).status, BuiltinOutcome::Status::holds);
  EXPECT_EQ(s.at("t1"), num(2));
}

TEST(Builtin, BoundaryComparison) {
  Substitution s;
  const auto g = std::get<Guard>(parse_program("r: a :- b, 5 <= 5.").rules[0].body[1]);
  EXPECT_EQ(evaluate_builtin(g, s).status, BuiltinOutcome::Status::holds);
}

TEST(Builtin, WindowWithInjectedClock) {
  Substitution s;
  const auto g = std::get<Guard>(parse_program("r: a :- b, now() - 10 <= 140.").rules[0].body[1]);
  EXPECT_EQ(evaluate_builtin(g, s, Number(150)).status, BuiltinOutcome::Status::holds);
  EXPECT_EQ(evaluate_builtin(g, s, Number(151)).status, BuiltinOutcome::Status::fails);
  EXPECT_EQ(evaluate_builtin(g, s).status, BuiltinOutcome::Status::error);
}

TEST(Builtin, Errors) {
  Substitution s;
  const auto unbound = std::get<Guard>(parse_program("r: a :- b, ?x < 1.").rules[0].body[1]);
  EXPECT_EQ(evaluate_builtin(unbound, s).status, BuiltinOutcome::Status::error);
  const auto div = std::get<Guard>(parse_program("r: a :- b, ?y is 1 / 0.").rules[0].body[1]);
  const auto out = evaluate_builtin(div, s);
  EXPECT_EQ(out.status, BuiltinOutcome::Status::error);
  EXPECT_NE(out.message.find("division by zero"), std::string::npos);
}
