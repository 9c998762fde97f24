#include <gtest/gtest.h>

#include <deque>
#include <queue>
#include <random>
#include <sstream>

#include "disarm/exchange.hpp"
#include "support/exchange_world.hpp"

using namespace disarm;

using namespace testsupport;

TEST(InitiateRequest, OnePerWhitelistMember) {
  World w;
  for (auto n : {"a", "b", "c"}) w.add(n);
  w.trust("a", "b");
  w.trust("a", "c");
  ExchangeState ex;
  const auto reqs = initiate_request(w["a"], ex, "z", 2);
  ASSERT_EQ(reqs.size(), 2u);
  for (const auto& r : reqs) {
    EXPECT_EQ(r.ttl, 2);
    EXPECT_EQ(r.origin, "a");
    EXPECT_EQ(r.hop_path, std::vector<std::string>{"a"});
    EXPECT_NO_THROW(r.validate());
  }
  EXPECT_EQ(reqs[0].receiver, "b");
  EXPECT_EQ(reqs[1].receiver, "c");
}

TEST(InitiateRequest, EmptyWhitelistSendsNothing) {
  World w;
  w.add("a");
  ExchangeState ex;
  EXPECT_TRUE(initiate_request(w["a"], ex, "z", 2).empty());
}

TEST(InitiateRequest, ZeroTtlStillSends) {
  World w;
  w.add("a");
  w.add("b");
  w.trust("a", "b");
  ExchangeState ex;
  const auto reqs = initiate_request(w["a"], ex, "z", 0);
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0].ttl, 0);
  EXPECT_THROW(initiate_request(w["a"], ex, "z", -1), std::invalid_argument);
}

TEST(RatingRequest, ValidateRejectsBadPaths) {
  RatingRequest r{"q", "a", "a", "b", "z", 1, {"a"}};
  EXPECT_NO_THROW(r.validate());
  r.hop_path = {"b"};
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r.hop_path = {"a", "c", "a"};
  EXPECT_THROW(r.validate(), std::invalid_argument);
  r.hop_path = {"a"};
  r.ttl = -1;
  EXPECT_THROW(r.validate(), std::invalid_argument);
}

TEST(HandleRequest, AnswersAndForwards) {
  World w;
  for (auto n : {"a", "c", "d"}) w.add(n);
  w.trust("c", "d");
  w.opinion("c", "z");
  ExchangeState ex;
  const auto out = handle_request(w["c"], ex, {"a#1", "a", "a", "c", "z", 2, {"a"}});
  EXPECT_TRUE(out.accepted);
  ASSERT_EQ(out.responses.size(), 1u);
  EXPECT_EQ(out.responses[0].ratings.size(), 1u);
  EXPECT_EQ(out.responses[0].receiver, "a");
  ASSERT_EQ(out.forwards.size(), 1u);
  EXPECT_EQ(out.forwards[0].ttl, 1);
  EXPECT_EQ(out.forwards[0].receiver, "d");
  EXPECT_EQ(out.forwards[0].hop_path, (std::vector<std::string>{"a", "c"}));
}

TEST(HandleRequest, BlacklistedSenderIgnored) {
  World w;
  for (auto n : {"a", "c", "d"}) w.add(n);
  w.trust("c", "d");
  w.distrust("c", "a");
  w.opinion("c", "z");
  ExchangeState ex;
  const auto out = handle_request(w["c"], ex, {"a#1", "a", "a", "c", "z", 2, {"a"}});
  EXPECT_FALSE(out.accepted);
  EXPECT_TRUE(out.responses.empty());
  EXPECT_TRUE(out.forwards.empty());
  EXPECT_EQ(ex.ignored_requests, 1u);
}

TEST(HandleRequest, ZeroTtlAnswersWithoutForwarding) {
  World w;
  for (auto n : {"a", "c", "d"}) w.add(n);
  w.trust("c", "d");
  w.opinion("c", "z");
  ExchangeState ex;
  const auto out = handle_request(w["c"], ex, {"a#1", "a", "a", "c", "z", 0, {"a"}});
  EXPECT_EQ(out.responses.size(), 1u);
  EXPECT_TRUE(out.forwards.empty());
}

TEST(HandleRequest, NoRatingsNoResponse) {
  World w;
  for (auto n : {"a", "c"}) w.add(n);
  ExchangeState ex;
  const auto out = handle_request(w["c"], ex, {"a#1", "a", "a", "c", "z", 1, {"a"}});
  EXPECT_TRUE(out.accepted);
  EXPECT_TRUE(out.responses.empty());
}

TEST(HandleRequest, OnlyOwnRatingsAnswered) {
  World w;
  for (auto n : {"a", "c"}) w.add(n);
  Rating third;
  third.id = "e_1";
  third.truster = "e";
  third.trustee = "z";
  third.scores.fill(4);
  w["c"].record_rating(third, {"e"});
  ExchangeState ex;
  EXPECT_TRUE(handle_request(w["c"], ex, {"a#1", "a", "a", "c", "z", 1, {"a"}}).responses.empty());
}

TEST(HandleRequest, DuplicateRequestServedOnce) {
  World w;
  for (auto n : {"a", "b", "c"}) w.add(n);
  w.opinion("c", "z");
  ExchangeState ex;
  EXPECT_TRUE(handle_request(w["c"], ex, {"a#1", "a", "a", "c", "z", 1, {"a"}}).accepted);
  EXPECT_FALSE(handle_request(w["c"], ex, {"a#1", "a", "b", "c", "z", 0, {"a", "b"}}).accepted);
}

TEST(HandleRequest, NeverForwardsAlongThePath) {
  World w;
  for (auto n : {"a", "b", "c"}) w.add(n);
  w.trust("c", "a");
  w.trust("c", "b");
  ExchangeState ex;
  const auto out = handle_request(w["c"], ex, {"a#1", "a", "b", "c", "z", 2, {"a", "b"}});
  EXPECT_TRUE(out.forwards.empty());
}

TEST(HandleResponse, StoresFromTrustedSender) {
  World w;
  for (auto n : {"a", "b", "c"}) w.add(n);
  ExchangeState ex;
  w.trust("a", "b");
  initiate_request(w["a"], ex, "z", 1);
  const Rating r1 = w.opinion("b", "z");
  const Rating r2 = w.opinion("b", "z");
  const std::size_t before = w["a"].stored_count();
  EXPECT_FALSE(handle_response(w["a"], ex, {"a#1", "b", "a", "z", {r1, r2}, {"b"}}));
  EXPECT_EQ(w["a"].stored_count(), before + 2);
  EXPECT_EQ(w["a"].find(r1.id)->provenance, std::vector<std::string>{"b"});
  handle_response(w["a"], ex, {"a#1", "b", "a", "z", {r1}, {"b"}});
  EXPECT_EQ(w["a"].stored_count(), before + 2);
}

TEST(HandleResponse, BlacklistedSenderDropped) {
  World w;
  for (auto n : {"a", "b"}) w.add(n);
  ExchangeState ex;
  w.distrust("a", "b");
  initiate_request(w["a"], ex, "z", 1);
  const Rating r1 = w.opinion("b", "z");
  const std::size_t before = w["a"].stored_count();
  handle_response(w["a"], ex, {"a#1", "b", "a", "z", {r1}, {"b"}});
  EXPECT_EQ(w["a"].stored_count(), before);
  EXPECT_EQ(ex.blocked_responses, 1u);
}

TEST(HandleResponse, BlacklistedAgentAnywhereOnChainDropped) {
  World w;
  for (auto n : {"a", "b", "c"}) w.add(n);
  ExchangeState ex;
  w.trust("a", "b");
  w.distrust("a", "c");
  initiate_request(w["a"], ex, "z", 2);
  const Rating r = w.opinion("c", "z");
  const std::size_t before = w["a"].stored_count();
  handle_response(w["a"], ex, {"a#1", "b", "a", "z", {r}, {"c", "b"}});
  EXPECT_EQ(w["a"].stored_count(), before);
}

TEST(HandleResponse, UnknownRequestCounted) {
  World w;
  w.add("a");
  ExchangeState ex;
  EXPECT_FALSE(handle_response(w["a"], ex, {"x#9", "b", "a", "z", {}, {"b"}}));
  EXPECT_EQ(ex.unknown_responses, 1u);
}

TEST(HandleResponse, RelaysTowardOrigin) {
  World w;
  for (auto n : {"b", "c"}) w.add(n);
  ExchangeState ex;
  handle_request(w["b"], ex, {"a#1", "a", "a", "b", "z", 1, {"a"}});
  const Rating r = w.opinion("c", "z");
  const std::size_t before = w["b"].stored_count();
  const auto relay = handle_response(w["b"], ex, {"a#1", "c", "b", "z", {r}, {"c"}});
  ASSERT_TRUE(relay);
  EXPECT_EQ(relay->receiver, "a");
  EXPECT_EQ(relay->sender, "b");
  EXPECT_EQ(relay->chain, (std::vector<std::string>{"c", "b"}));
  EXPECT_EQ(w["b"].stored_count(), before);
}

TEST(Collect, StarTopology) {
  World w;
  for (auto n : {"a", "b", "c", "d"}) w.add(n);
  for (auto n : {"b", "c", "d"}) {
    w.trust("a", n);
    w.opinion(n, "z");
  }
  const std::string id = w.net.initiate("a", "z", 1);
  EXPECT_EQ(w.net.collect("a", id, 10).size(), 3u);
}

TEST(Collect, NobodyKnowsAnything) {
  World w;
  for (auto n : {"a", "b", "c"}) w.add(n);
  w.trust("a", "b");
  w.trust("a", "c");
  const std::string id = w.net.initiate("a", "z", 2);
  EXPECT_TRUE(w.net.collect("a", id, 10).empty());
}

TEST(Collect, ChainRelay) {
  World w;
  for (auto n : {"a", "b", "c"}) w.add(n);
  w.trust("a", "b");
  w.trust("b", "c");
  const Rating r = w.opinion("c", "z");
  const std::string id = w.net.initiate("a", "z", 2);
  // a->b, b->c, c->b, b->a
  EXPECT_TRUE(w.net.collect("a", id, 3).empty());
  const auto got = w.net.collect("a", id, 1);
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0], r);
  EXPECT_EQ(w["a"].find(r.id)->provenance, (std::vector<std::string>{"c", "b"}));
  EXPECT_TRUE(w["b"].own_ratings_about("z").empty());
  EXPECT_EQ(w["b"].find(r.id), nullptr);
}

TEST(SimNetwork, TraceLines) {
  World w;
  for (auto n : {"a", "b"}) w.add(n);
  w.trust("a", "b");
  w.opinion("b", "z");
  std::ostringstream trace;
  w.net.set_trace(&trace);
  w.net.initiate("a", "z", 1);
  w.net.run(10);
  EXPECT_EQ(trace.str(), "1,request,a,b,z,1\n2,response,b,a,z,-\n");
}

TEST(SimNetwork, UnknownReceiverIsAnError) {
  World w;
  w.add("a");
  EXPECT_THROW(w.net.initiate("nobody", "z", 1), Error);
}


TEST(Propagation, RecipientsEqualGraphHorizon) {
  std::mt19937_64 rng(2024);
  int nonempty = 0, blocked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const RandomGraph g = random_graph(rng);
    World w;
    for (int i = 0; i < g.n; ++i) w.add(name(i));
    for (int a = 0; a < g.n; ++a) {
      for (int b : g.wl[a]) w.trust(name(a), name(b));
      for (int b : g.bl[a]) w.distrust(name(a), name(b));
    }
    for (int a = 0; a < g.n; ++a) {
      std::set<std::string> wl, bl;
      for (int b : g.wl[a]) wl.insert(name(b));
      for (int b : g.bl[a]) bl.insert(name(b));
      ASSERT_EQ(w[name(a)].whitelist(), wl);
      ASSERT_EQ(w[name(a)].blacklist(), bl);
    }
    const int ttl = static_cast<int>(trial % 4);
    const int origin = static_cast<int>(rng() % g.n);
    w.net.initiate(name(origin), "zz", ttl);
    std::set<std::string> accepted;
    std::size_t requests = 0;
    for (int round = 1; round <= 2 * (ttl + 1) + 2; ++round) {
      for (const auto& d : w.net.step()) {
        if (!d.request) continue;
        ++requests;
        EXPECT_LE(d.round, static_cast<std::uint64_t>(ttl + 1)) << "trial " << trial;
        if (d.accepted) accepted.insert(d.receiver);
        if (!d.accepted && w[d.receiver].blacklisted(d.sender)) ++blocked;
      }
    }
    EXPECT_TRUE(w.net.idle());
    std::set<std::string> expected;
    for (int v : horizon(g, origin, ttl)) expected.insert(name(v));
    EXPECT_EQ(accepted, expected) << "trial " << trial << " ttl " << ttl;
    nonempty += !expected.empty();

    std::size_t max_out = 0;
    for (const auto& s : g.wl) max_out = std::max(max_out, s.size());
    std::size_t bound = 0, power = 1;
    for (int d = 0; d <= ttl; ++d, power *= max_out) bound += power * max_out;
    EXPECT_LE(requests, bound);
  }
  EXPECT_GT(nonempty, 60);
  EXPECT_GT(blocked, 10);
}

TEST(Propagation, DeterministicTrace) {
  auto once = [] {
    std::mt19937_64 rng(5);
    RandomGraph g = random_graph(rng);
    while (g.n < 10) g = random_graph(rng);
    World w;
    for (int i = 0; i < g.n; ++i) w.add(name(i));
    for (int a = 0; a < g.n; ++a) {
      for (int b : g.wl[a]) w.trust(name(a), name(b));
      if (a % 2) w.opinion(name(a), "zz");
    }
    std::ostringstream trace;
    w.net.set_trace(&trace);
    int origin = 0;
    for (int i = 0; i < g.n; ++i)
      if (g.wl[i].size() > g.wl[origin].size()) origin = i;
    w.net.initiate(name(origin), "zz", 3);
    w.net.run(20);
    return trace.str();
  };
  const std::string first = once();
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, once());
}
