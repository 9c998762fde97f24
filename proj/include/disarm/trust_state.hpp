#pragma once

// One agent's trust state: its rating repository, the behavior events drawn
// from its own ratings, and the white/black lists maintained by the strategy
// rules (strategy_r8..r11.dpl) and the list rules (lists.dpl).

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "disarm/corpus.hpp"
#include "disarm/engine.hpp"
#include "disarm/errors.hpp"
#include "disarm/rating.hpp"

namespace disarm {

enum class BehaviorKind : std::uint8_t { good, bad };

struct BehaviorEvent {
  BehaviorKind kind = BehaviorKind::good;
  std::int64_t time = 0;
  std::string truster;
  std::string trustee;
  Coefficient reason = Coefficient::response_time;

  Literal to_literal() const {
    Literal lit;
    lit.predicate = kind == BehaviorKind::good ? "good_behavior" : "bad_behavior";
    lit.args.emplace("time", Number(time));
    lit.args.emplace("truster", Symbol{truster});
    lit.args.emplace("trustee", Symbol{trustee});
    lit.args.emplace("reason", Symbol{coefficient_name(reason)});
    return lit;
  }

  friend auto operator<=>(const BehaviorEvent&, const BehaviorEvent&) = default;
};

/// Good needs all six coefficients strictly above their thresholds and is
/// reported under `good_reason`; bad fires once per coefficient at or below
/// its threshold.
inline std::vector<BehaviorEvent> classify_behavior(const Thresholds& thresholds, const Rating& rating,
                                                    Coefficient good_reason = Coefficient::response_time) {
  std::vector<BehaviorEvent> out;
  bool all_above = true;
  for (auto c : kCoefficients) {
    if (rating.score(c) <= thresholds.of(c)) {
      all_above = false;
      out.push_back({BehaviorKind::bad, rating.time, rating.truster, rating.trustee, c});
    }
  }
  if (all_above) out.push_back({BehaviorKind::good, rating.time, rating.truster, rating.trustee, good_reason});
  return out;
}

enum class ListName : std::uint8_t { whitelist, blacklist };

/// A derived `whitelist`/`blacklist` literal; `removal` is the strongly
/// negated form (`~whitelist(...)`).
struct ListEvent {
  ListName list = ListName::whitelist;
  bool removal = false;
  std::string trustee;
  std::int64_t time = 0;

  Literal to_literal() const {
    Literal lit;
    lit.predicate = list == ListName::whitelist ? "whitelist" : "blacklist";
    if (removal) lit.polarity = Polarity::negated;
    lit.args.emplace("trustee", Symbol{trustee});
    lit.args.emplace("time", Number(time));
    return lit;
  }

  friend auto operator<=>(const ListEvent& a, const ListEvent& b) {
    return std::tie(a.time, a.trustee, a.list, a.removal) <=> std::tie(b.time, b.trustee, b.list, b.removal);
  }
  friend bool operator==(const ListEvent&, const ListEvent&) = default;
};

struct ListDecision {
  std::set<std::string> whitelist;
  std::set<std::string> blacklist;
  friend bool operator==(const ListDecision&, const ListDecision&) = default;
};

/// Which strategy rules the agent loads. Default is r8 + r10.
struct Strategy {
  SourceProgram rules = corpus::load({"strategy_r8.dpl", "strategy_r10.dpl"});
  Coefficient good_reason = Coefficient::response_time;

  static Strategy from_corpus(const std::vector<std::string>& files,
                              Coefficient good_reason = Coefficient::response_time) {
    return Strategy{corpus::load(files), good_reason};
  }
};

/// Compiled engines shared by every agent with the same strategy.
struct ListEngines {
  Engine strategy;
  Engine lists;

  static std::shared_ptr<const ListEngines> get(const SourceProgram& strategy_rules) {
    static std::map<std::string, std::shared_ptr<const ListEngines>> cache;
    const std::string key = serialize_program(strategy_rules);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto made = std::make_shared<const ListEngines>(
        ListEngines{Engine(strategy_rules), Engine(corpus::load({"lists.dpl"}))});
    cache.emplace(key, made);
    return made;
  }
};

struct StoredRating {
  Rating rating;
  /// Agents the rating passed through on its way here, starting with the
  /// agent that answered. Empty for the agent's own ratings.
  std::vector<std::string> provenance;
};

enum class ListUpdateMode : std::uint8_t { incremental, full_history };

class AgentTrustState {
 public:
  explicit AgentTrustState(std::string self, Thresholds thresholds = {}, const Strategy& strategy = Strategy{})
      : self_(std::move(self)),
        thresholds_(thresholds),
        good_reason_(strategy.good_reason),
        engines_(ListEngines::get(strategy.rules)) {
    thresholds_.validate();
  }

  // The trustee index points into the repository, so copies are not allowed.
  AgentTrustState(const AgentTrustState&) = delete;
  AgentTrustState& operator=(const AgentTrustState&) = delete;
  AgentTrustState(AgentTrustState&&) = default;
  AgentTrustState& operator=(AgentTrustState&&) = default;

  const std::string& self() const { return self_; }
  const Thresholds& thresholds() const { return thresholds_; }

  /// Returns false when an identical rating is already stored.
  bool record_rating(const Rating& rating, std::vector<std::string> provenance = {}) {
    auto it = ratings_.find(rating.id);
    if (it != ratings_.end()) {
      if (it->second.rating == rating) return false;
      throw Error("rating id " + rating.id + " already stored with a different payload");
    }
    rating.validate();
    auto pos = ratings_.emplace(rating.id, StoredRating{rating, std::move(provenance)}).first;
    by_trustee_[rating.trustee].push_back(&pos->second);
    if (rating.truster == self_) record_own(rating);
    return true;
  }

  std::size_t stored_count() const { return ratings_.size(); }
  const std::map<std::string, StoredRating>& ratings() const { return ratings_; }

  const StoredRating* find(const std::string& id) const {
    auto it = ratings_.find(id);
    return it == ratings_.end() ? nullptr : &it->second;
  }

  std::vector<Rating> ratings_about(const std::string& trustee) const {
    std::vector<Rating> out;
    auto it = by_trustee_.find(trustee);
    if (it == by_trustee_.end()) return out;
    out.reserve(it->second.size());
    for (const auto* stored : it->second) out.push_back(stored->rating);
    return out;
  }

  /// Pointers into the repository; valid for the life of the state.
  std::vector<const Rating*> rating_refs_about(const std::string& trustee) const {
    std::vector<const Rating*> out;
    auto it = by_trustee_.find(trustee);
    if (it == by_trustee_.end()) return out;
    out.reserve(it->second.size());
    for (const auto* stored : it->second) out.push_back(&stored->rating);
    return out;
  }

  std::vector<Rating> own_ratings_about(const std::string& trustee) const {
    std::vector<Rating> out;
    auto it = by_trustee_.find(trustee);
    if (it == by_trustee_.end()) return out;
    for (const auto* stored : it->second)
      if (stored->rating.truster == self_) out.push_back(stored->rating);
    return out;
  }

  bool has_own_rating_about(const std::string& trustee) const { return known_.count(trustee) > 0; }

  /// Trustees of the agent's own ratings.
  const std::set<std::string>& known_agents() const { return known_; }

  std::vector<BehaviorEvent> classify_behavior(const Rating& rating) const {
    if (rating.truster != self_) return {};
    return disarm::classify_behavior(thresholds_, rating, good_reason_);
  }

  const std::vector<BehaviorEvent>& behavior_events() const { return behaviors_; }

  /// Runs the strategy and list rules over behavior events up to `at`.
  ///
  /// Incremental mode evaluates one event time at a time and feeds the
  /// engines only what that time can depend on: for each (trustee, kind,
  /// reason) the events at that time and at the two latest earlier times,
  /// and for each trustee the latest literal of each list polarity. The
  /// strategy rules need at most two earlier witnesses and the list rules
  /// compare against the latest earlier entry, so the result equals a full
  /// evaluation. Ratings recorded out of time order trigger a replay.
  ListDecision update_lists(std::int64_t at, ListUpdateMode mode = ListUpdateMode::incremental) {
    if (mode == ListUpdateMode::full_history) {
      auto [events, decision] = evaluate_full_history(at);
      reset_lists();
      for (const auto& e : events) apply_list_event(e);
      list_events_ = std::move(events);
      whitelist_ = decision.whitelist;
      blacklist_ = decision.blacklist;
      processed_through_ = at;
      replay_ = false;
      return decision;
    }
    if (replay_) {
      reset_lists();
      processed_through_ = 0;
      replay_ = false;
    }
    for (auto it = events_by_time_.upper_bound(processed_through_);
         it != events_by_time_.end() && it->first <= at; ++it)
      step(it->first, it->second);
    processed_through_ = std::max(processed_through_, at);
    return {whitelist_, blacklist_};
  }

  /// Evaluates both rule sets over the whole event history, without the
  /// incremental window. Reference for the incremental path.
  std::pair<std::vector<ListEvent>, ListDecision> evaluate_full_history(std::int64_t at) const {
    std::vector<Literal> facts{self_fact(self_)};
    for (const auto& e : behaviors_)
      if (e.time <= at) facts.push_back(e.to_literal());
    const ConclusionSet adds = engines_->strategy.run(facts);
    std::vector<Literal> list_facts;
    for (const auto& lit : adds.defeasible_pos)
      if (lit.predicate == "add_whitelist" || lit.predicate == "add_blacklist") list_facts.push_back(lit);
    for (const auto& x : known_) {
      list_facts.push_back(ListEvent{ListName::whitelist, true, x, 0}.to_literal());
      list_facts.push_back(ListEvent{ListName::blacklist, true, x, 0}.to_literal());
    }
    const ConclusionSet lists = engines_->lists.run(list_facts);
    std::vector<ListEvent> events;
    ListDecision decision;
    for (const auto& lit : lists.defeasible_pos) {
      if (auto e = as_list_event(lit); e && e->time > 0) events.push_back(*e);
      if (lit.negated()) continue;
      if (lit.predicate == "WL") decision.whitelist.insert(symbol_arg(lit, "trustee"));
      if (lit.predicate == "BL") decision.blacklist.insert(symbol_arg(lit, "trustee"));
    }
    std::sort(events.begin(), events.end());
    return {std::move(events), std::move(decision)};
  }

  const std::set<std::string>& whitelist() const { return whitelist_; }
  const std::set<std::string>& blacklist() const { return blacklist_; }
  bool whitelisted(const std::string& agent) const { return whitelist_.count(agent) > 0; }
  bool blacklisted(const std::string& agent) const { return blacklist_.count(agent) > 0; }
  const std::vector<ListEvent>& list_events() const { return list_events_; }

  /// One fact per line: self, thresholds, stored ratings, behavior events,
  /// list events, current lists.
  std::string snapshot() const {
    std::ostringstream out;
    out << to_string(self_fact(self_)) << ".\n";
    for (const auto& f : thresholds_.to_facts()) out << to_string(f) << ".\n";
    for (const auto& [id, stored] : ratings_) out << to_string(stored.rating.to_literal()) << ".\n";
    for (const auto& e : behaviors_) out << to_string(e.to_literal()) << ".\n";
    for (const auto& e : list_events_) out << to_string(e.to_literal()) << ".\n";
    for (const auto& x : whitelist_) out << "WL(trustee->" << x << ").\n";
    for (const auto& x : blacklist_) out << "BL(trustee->" << x << ").\n";
    return out.str();
  }

 private:
  using HistoryKey = std::pair<BehaviorKind, Coefficient>;

  void record_own(const Rating& rating) {
    if (known_.insert(rating.trustee).second) {
      auto& m = list_max_[rating.trustee];
      m[slot(ListName::whitelist, true)] = 0;
      m[slot(ListName::blacklist, true)] = 0;
    }
    for (const auto& e : classify_behavior(rating)) {
      behaviors_.push_back(e);
      history_[e.trustee][{e.kind, e.reason}].insert(e.time);
      events_by_time_[e.time].insert(e.trustee);
      if (e.time <= processed_through_) replay_ = true;
    }
  }

  static std::size_t slot(ListName list, bool removal) {
    return static_cast<std::size_t>(list) * 2 + (removal ? 1 : 0);
  }

  static std::string symbol_arg(const Literal& lit, const char* key) {
    return std::get<Symbol>(lit.args.at(key)).name;
  }

  static std::optional<ListEvent> as_list_event(const Literal& lit) {
    ListEvent e;
    if (lit.predicate == "whitelist") e.list = ListName::whitelist;
    else if (lit.predicate == "blacklist") e.list = ListName::blacklist;
    else return std::nullopt;
    e.removal = lit.negated();
    e.trustee = symbol_arg(lit, "trustee");
    e.time = std::get<Number>(lit.args.at("time")).numerator();
    return e;
  }

  void reset_lists() {
    list_events_.clear();
    whitelist_.clear();
    blacklist_.clear();
    list_max_.clear();
    for (const auto& x : known_) {
      auto& m = list_max_[x];
      m[slot(ListName::whitelist, true)] = 0;
      m[slot(ListName::blacklist, true)] = 0;
    }
  }

  void apply_list_event(const ListEvent& e) {
    auto& cur = list_max_[e.trustee][slot(e.list, e.removal)];
    if (!cur || *cur < e.time) cur = e.time;
  }

  void step(std::int64_t tau, const std::set<std::string>& trustees) {
    std::vector<Literal> facts{self_fact(self_)};
    for (const auto& x : trustees) {
      for (const auto& [key, times] : history_.at(x)) {
        auto it = times.upper_bound(tau);
        int earlier = 0;
        while (it != times.begin()) {
          --it;
          if (*it < tau && ++earlier > 2) break;
          facts.push_back(BehaviorEvent{key.first, *it, self_, x, key.second}.to_literal());
        }
      }
    }
    const ConclusionSet adds = engines_->strategy.run(facts);

    std::vector<Literal> list_facts;
    std::set<std::string> touched;
    for (const auto& lit : adds.defeasible_pos) {
      if (lit.predicate != "add_whitelist" && lit.predicate != "add_blacklist") continue;
      if (std::get<Number>(lit.args.at("time")) != Number(tau)) continue;
      list_facts.push_back(lit);
      touched.insert(symbol_arg(lit, "trustee"));
    }
    if (touched.empty()) return;
    for (const auto& x : touched) {
      const auto& m = list_max_.at(x);
      for (auto list : {ListName::whitelist, ListName::blacklist})
        for (bool removal : {false, true})
          if (const auto& t = m[slot(list, removal)]) list_facts.push_back(ListEvent{list, removal, x, *t}.to_literal());
    }
    const ConclusionSet lists = engines_->lists.run(list_facts);
    std::vector<ListEvent> fresh;
    for (const auto& lit : lists.defeasible_pos)
      if (auto e = as_list_event(lit); e && e->time == tau) fresh.push_back(*e);
    std::sort(fresh.begin(), fresh.end());
    for (const auto& e : fresh) {
      apply_list_event(e);
      list_events_.push_back(e);
    }
    for (const auto& x : touched) {
      Literal wl = make_literal("WL", {{"trustee", Symbol{x}}});
      Literal bl = make_literal("BL", {{"trustee", Symbol{x}}});
      if (lists.provable(wl)) whitelist_.insert(x); else whitelist_.erase(x);
      if (lists.provable(bl)) blacklist_.insert(x); else blacklist_.erase(x);
    }
  }

  std::string self_;
  Thresholds thresholds_;
  Coefficient good_reason_;
  std::shared_ptr<const ListEngines> engines_;

  std::map<std::string, StoredRating> ratings_;
  std::map<std::string, std::vector<const StoredRating*>> by_trustee_;
  std::set<std::string> known_;

  std::vector<BehaviorEvent> behaviors_;
  std::map<std::string, std::map<HistoryKey, std::set<std::int64_t>>> history_;
  std::map<std::int64_t, std::set<std::string>> events_by_time_;
  std::int64_t processed_through_ = 0;
  bool replay_ = false;

  std::map<std::string, std::array<std::optional<std::int64_t>, 4>> list_max_;
  std::vector<ListEvent> list_events_;
  std::set<std::string> whitelist_;
  std::set<std::string> blacklist_;
};

}  // namespace disarm
