#include <gtest/gtest.h>

#include <random>

#include "disarm/corpus.hpp"
#include "disarm/engine.hpp"
#include "disarm/trust_state.hpp"

using namespace disarm;

namespace {

Rating rating(std::string id, std::string truster, std::string trustee, std::int64_t t, double all = 6.0) {
  Rating r;
  r.id = std::move(id);
  r.truster = std::move(truster);
  r.trustee = std::move(trustee);
  r.time = t;
  r.scores.fill(all);
  r.confidence = 0.9;
  r.transaction_value = 0.8;
  return r;
}

Rating sample_rating() {
  Rating r = rating("I", "A", "X", 140630105632);
  r.scores = {9, 7, 6, 6, 8, 7};
  return r;
}

int counter = 0;

}  // namespace

namespace disarm {
void PrintTo(const ListEvent& e, std::ostream* os) { *os << to_string(e.to_literal()); }
}  // namespace disarm

namespace {

void rate(AgentTrustState& s, const std::string& trustee, std::int64_t t, double all) {
  s.record_rating(rating(s.self() + "_" + std::to_string(++counter), s.self(), trustee, t, all));
}

}  // namespace

TEST(Rating, SampleRatingIsValid) {
  EXPECT_NO_THROW(sample_rating().validate());
  EXPECT_EQ(Rating::from_literal(sample_rating().to_literal()), sample_rating());
}

TEST(Rating, ValidationRejectsOutOfRange) {
  auto bad = [](auto mutate) {
    Rating r = sample_rating();
    mutate(r);
    return r;
  };
  EXPECT_THROW(bad([](Rating& r) { r.scores[2] = 0.05; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](Rating& r) { r.scores[0] = 10.5; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](Rating& r) { r.confidence = 1.2; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](Rating& r) { r.transaction_value = -0.1; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](Rating& r) { r.time = 0; }).validate(), std::invalid_argument);
  EXPECT_THROW(bad([](Rating& r) { r.trustee = "A"; }).validate(), std::invalid_argument);
}

TEST(Rating, LiteralUsesCorpusSlots) {
  const Literal lit = rating("r1", "a", "b", 3).to_literal();
  EXPECT_EQ(to_string(lit),
            "rating(completeness->6, confidence->0.9, cooperation->6, correctness->6, id->r1, "
            "outcome_feeling->6, response_time->6, time->3, transaction_value->0.8, trustee->b, "
            "truster->a, validity->6)");
}

TEST(Thresholds, FactsAreThePositionalThresholdPredicates) {
  std::vector<std::string> text;
  for (const auto& f : Thresholds{}.to_facts()) text.push_back(to_string(f));
  EXPECT_EQ(text.front(), "response_time_threshold(5)");
  EXPECT_EQ(text.back(), "transaction_value_threshold(0.5)");
  EXPECT_EQ(text.size(), 8u);
}

TEST(RecordRating, StoresSampleRating) {
  AgentTrustState s("A");
  EXPECT_TRUE(s.record_rating(sample_rating()));
  EXPECT_EQ(s.stored_count(), 1u);
}

TEST(RecordRating, DuplicateIsNoOp) {
  AgentTrustState s("A");
  s.record_rating(sample_rating());
  EXPECT_FALSE(s.record_rating(sample_rating()));
  EXPECT_EQ(s.stored_count(), 1u);
}

TEST(RecordRating, CollisionIsAnError) {
  AgentTrustState s("A");
  s.record_rating(sample_rating());
  Rating other = sample_rating();
  other.scores[1] = 3;
  EXPECT_THROW(s.record_rating(other), Error);
  EXPECT_EQ(s.stored_count(), 1u);
}

TEST(RecordRating, KeepsProvenance) {
  AgentTrustState s("a");
  s.record_rating(rating("q1", "c", "x", 2), {"b", "c"});
  ASSERT_NE(s.find("q1"), nullptr);
  EXPECT_EQ(s.find("q1")->provenance, (std::vector<std::string>{"b", "c"}));
}

TEST(ClassifyBehavior, AllAboveIsGood) {
  const auto ev = classify_behavior(Thresholds{}, rating("q", "a", "x", 1, 6.0));
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, BehaviorKind::good);
  EXPECT_EQ(ev[0].reason, Coefficient::response_time);
}

TEST(ClassifyBehavior, OneAtThresholdIsBadForThatReason) {
  Rating r = rating("q", "a", "x", 1, 6.0);
  r.scores[static_cast<int>(Coefficient::cooperation)] = 5.0;
  const auto ev = classify_behavior(Thresholds{}, r);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, BehaviorKind::bad);
  EXPECT_EQ(ev[0].reason, Coefficient::cooperation);
}

TEST(ClassifyBehavior, AllMinimalGivesSixBad) {
  const auto ev = classify_behavior(Thresholds{}, rating("q", "a", "x", 1, 0.1));
  EXPECT_EQ(ev.size(), 6u);
  for (const auto& e : ev) EXPECT_EQ(e.kind, BehaviorKind::bad);
}

TEST(ClassifyBehavior, ExactlyAtThresholdsIsNeverGood) {
  const auto ev = classify_behavior(Thresholds{}, rating("q", "a", "x", 1, 5.0));
  EXPECT_EQ(ev.size(), 6u);
  for (const auto& e : ev) EXPECT_EQ(e.kind, BehaviorKind::bad);
}

TEST(ClassifyBehavior, OnlyOwnRatingsAreClassified) {
  AgentTrustState s("a");
  EXPECT_TRUE(s.classify_behavior(rating("q", "b", "x", 1)).empty());
  EXPECT_EQ(s.classify_behavior(rating("q", "a", "x", 1)).size(), 1u);
}

// The native classifier must agree with behavior.dpl run through the engine.
TEST(ClassifyBehavior, AgreesWithRuleFile) {
  const Engine engine(corpus::load({"behavior.dpl"}));
  std::mt19937_64 rng(7);
  const double grid[] = {0.1, 2.5, 4.99, 5.0, 5.01, 7.5, 10.0};
  std::uniform_int_distribution<int> pick(0, 6);
  for (int trial = 0; trial < 200; ++trial) {
    Thresholds th;
    for (auto& v : th.coefficient) v = grid[pick(rng)];
    Rating r = rating("q" + std::to_string(trial), "a", "x", 1 + trial);
    for (auto& v : r.scores) v = grid[pick(rng)];
    std::vector<Literal> facts = th.to_facts();
    facts.push_back(r.to_literal());
    const ConclusionSet c = engine.run(facts);
    std::set<Literal> from_engine;
    for (const auto& lit : c.defeasible_pos)
      if (lit.predicate == "good_behavior" || lit.predicate == "bad_behavior") from_engine.insert(lit);
    std::set<Literal> native;
    for (const auto& e : classify_behavior(th, r)) native.insert(e.to_literal());
    EXPECT_EQ(native, from_engine) << "trial " << trial;
  }
}

TEST(KnownAgents, EmptyWithoutOwnRatings) {
  AgentTrustState s("a");
  s.record_rating(rating("q1", "b", "z", 1));
  EXPECT_TRUE(s.known_agents().empty());
}

TEST(KnownAgents, OnlyTrusteesOfOwnRatings) {
  AgentTrustState s("a");
  s.record_rating(rating("q1", "a", "x", 1));
  s.record_rating(rating("q2", "a", "y", 1));
  s.record_rating(rating("q3", "a", "x", 2));
  s.record_rating(rating("q4", "b", "z", 1));
  EXPECT_EQ(s.known_agents(), (std::set<std::string>{"x", "y"}));
}

TEST(UpdateLists, ThreeGoodBehaviorsWhitelist) {
  AgentTrustState s("a");
  rate(s, "x", 1, 8);
  rate(s, "x", 2, 8);
  EXPECT_TRUE(s.update_lists(2).whitelist.empty());
  rate(s, "x", 3, 8);
  const auto d = s.update_lists(3);
  EXPECT_EQ(d.whitelist, (std::set<std::string>{"x"}));
  EXPECT_TRUE(d.blacklist.empty());
}

TEST(UpdateLists, TwoBadBehaviorsBlacklist) {
  AgentTrustState s("a");
  rate(s, "x", 1, 2);
  EXPECT_TRUE(s.update_lists(1).blacklist.empty());
  rate(s, "x", 2, 2);
  const auto d = s.update_lists(2);
  EXPECT_EQ(d.blacklist, (std::set<std::string>{"x"}));
  EXPECT_TRUE(d.whitelist.empty());
}

TEST(UpdateLists, LaterWhitelistingRetractsBlacklist) {
  AgentTrustState s("a");
  rate(s, "x", 1, 2);
  rate(s, "x", 2, 2);
  EXPECT_TRUE(s.update_lists(2).blacklist.count("x"));
  for (int t = 3; t <= 5; ++t) rate(s, "x", t, 8);
  const auto d = s.update_lists(5);
  EXPECT_FALSE(d.blacklist.count("x"));
  EXPECT_TRUE(d.whitelist.count("x"));
  const std::vector<ListEvent> expected = {{ListName::blacklist, false, "x", 2},
                                           {ListName::whitelist, false, "x", 5},
                                           {ListName::blacklist, true, "x", 5}};
  EXPECT_EQ(s.list_events(), expected);
}

TEST(UpdateLists, BlacklistingRemovesFromWhitelist) {
  AgentTrustState s("a");
  for (int t = 1; t <= 3; ++t) rate(s, "x", t, 8);
  EXPECT_TRUE(s.update_lists(3).whitelist.count("x"));
  rate(s, "x", 4, 1);
  rate(s, "x", 5, 1);
  const auto d = s.update_lists(5);
  EXPECT_FALSE(d.whitelist.count("x"));
  EXPECT_TRUE(d.blacklist.count("x"));
}

TEST(UpdateLists, LenientStrategyMixesReasons) {
  // r11 needs three different reasons at three times; r10 would fire on two.
  AgentTrustState strict("a", Thresholds{}, Strategy::from_corpus({"strategy_r8.dpl", "strategy_r11.dpl"}));
  auto bad_in = [&](std::int64_t t, Coefficient c) {
    Rating r = rating("s" + std::to_string(t), "a", "x", t, 8);
    r.scores[static_cast<int>(c)] = 1;
    strict.record_rating(r);
  };
  bad_in(1, Coefficient::validity);
  bad_in(2, Coefficient::validity);
  EXPECT_TRUE(strict.update_lists(2).blacklist.empty());
  bad_in(3, Coefficient::cooperation);
  EXPECT_TRUE(strict.update_lists(3).blacklist.empty());
  bad_in(4, Coefficient::correctness);
  EXPECT_TRUE(strict.update_lists(4).blacklist.count("x"));
}

TEST(UpdateLists, EventsAfterAtWaitForLaterCall) {
  AgentTrustState s("a");
  rate(s, "x", 1, 2);
  rate(s, "x", 2, 2);
  EXPECT_TRUE(s.update_lists(1).blacklist.empty());
  EXPECT_TRUE(s.update_lists(2).blacklist.count("x"));
}

TEST(UpdateLists, OutOfOrderRatingReplays) {
  AgentTrustState s("a");
  rate(s, "x", 1, 8);
  rate(s, "x", 5, 8);
  s.update_lists(5);
  rate(s, "x", 3, 8);
  const auto d = s.update_lists(5);
  EXPECT_TRUE(d.whitelist.count("x"));
  EXPECT_EQ(s.list_events(), s.evaluate_full_history(5).first);
}

// Incremental list maintenance must match a full-history evaluation for
// every strategy combination, and the lists must stay disjoint.
TEST(UpdateLists, IncrementalMatchesFullHistory) {
  const std::vector<std::vector<std::string>> strategies = {{"strategy_r8.dpl", "strategy_r10.dpl"},
                                                            {"strategy_r9.dpl", "strategy_r11.dpl"},
                                                            {"strategy_r8.dpl", "strategy_r11.dpl"},
                                                            {"strategy_r9.dpl", "strategy_r10.dpl"}};
  std::mt19937_64 rng(11);
  const double grid[] = {1.0, 4.0, 5.0, 6.0, 9.0};
  int whitelisted = 0, blacklisted = 0, retractions = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto& files = strategies[trial % strategies.size()];
    AgentTrustState s("a", Thresholds{}, Strategy::from_corpus(files));
    std::int64_t t = 1;
    int n = 0;
    const int steps = 10 + static_cast<int>(rng() % 20);
    const bool mostly_bad = rng() % 2;
    for (int k = 0; k < steps; ++k) {
      const int trustees = 1 + static_cast<int>(rng() % 3);
      for (int j = 0; j < trustees; ++j) {
        Rating r = rating("a_" + std::to_string(++n), "a", "x" + std::to_string(rng() % 3), t);
        const bool good = (rng() % 3 == 0) != mostly_bad;
        for (auto& v : r.scores) v = good ? 9.0 : grid[rng() % 5];
        if (rng() % 15 == 0 && t > 2) r.time = 1 + static_cast<std::int64_t>(rng() % (t - 1));
        s.record_rating(r);
      }
      if (rng() % 3 == 0) {
        const auto d = s.update_lists(t);
        for (const auto& x : d.whitelist) EXPECT_FALSE(d.blacklist.count(x));
        const auto [events, full] = s.evaluate_full_history(t);
        ASSERT_EQ(d, full) << "trial " << trial << " t " << t;
        ASSERT_EQ(s.list_events(), events) << "trial " << trial << " t " << t;
        whitelisted += static_cast<int>(d.whitelist.size());
        blacklisted += static_cast<int>(d.blacklist.size());
        for (const auto& e : events) retractions += e.removal && e.time > 0;
      }
      t += 1 + static_cast<std::int64_t>(rng() % 2);
    }
  }
  EXPECT_GT(whitelisted, 20);
  EXPECT_GT(blacklisted, 20);
  EXPECT_GT(retractions, 20);
}

TEST(UpdateLists, ListEventTimesNeverDecrease) {
  AgentTrustState s("a");
  std::mt19937_64 rng(3);
  for (int t = 1; t <= 60; ++t) {
    rate(s, "x" + std::to_string(rng() % 4), t, rng() % 2 ? 9.0 : 1.0);
    s.update_lists(t);
  }
  const auto& ev = s.list_events();
  ASSERT_FALSE(ev.empty());
  for (std::size_t i = 1; i < ev.size(); ++i) EXPECT_LE(ev[i - 1].time, ev[i].time);
}

TEST(UpdateLists, FullHistoryModeMatches) {
  AgentTrustState a("a"), b("a");
  for (int t = 1; t <= 6; ++t) {
    const Rating r = rating("k" + std::to_string(t), "a", "x", t, t <= 3 ? 9.0 : 1.0);
    a.record_rating(r);
    b.record_rating(r);
  }
  EXPECT_EQ(a.update_lists(6), b.update_lists(6, ListUpdateMode::full_history));
  EXPECT_EQ(a.list_events(), b.list_events());
}

TEST(Snapshot, OneParsableFactPerLine) {
  AgentTrustState s("a");
  for (int t = 1; t <= 3; ++t) rate(s, "x", t, 9);
  s.record_rating(rating("w1", "b", "x", 2), {"b"});
  s.update_lists(3);
  const std::string text = s.snapshot();
  const SourceProgram p = parse_program(text);
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), p.facts.size());
  EXPECT_NE(text.find("self(agent->a).\n"), std::string::npos);
  EXPECT_NE(text.find("WL(trustee->x).\n"), std::string::npos);
  EXPECT_NE(text.find("whitelist(time->3, trustee->x).\n"), std::string::npos);
}
