#pragma once

// Rating location over the social graph. Requests travel along white-list
// edges with a hop budget; agents answer with their own ratings about the
// trustee and responses retrace the request path back to the origin.

#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "disarm/errors.hpp"
#include "disarm/rating.hpp"
#include "disarm/trust_state.hpp"

namespace disarm {

struct RatingRequest {
  std::string request_id;
  std::string origin;
  std::string sender;
  std::string receiver;
  std::string about;
  int ttl = 0;
  std::vector<std::string> hop_path;

  void validate() const {
    if (ttl < 0) throw std::invalid_argument("request " + request_id + ": negative ttl");
    if (hop_path.empty() || hop_path.front() != origin)
      throw std::invalid_argument("request " + request_id + ": hop path must start at the origin");
    std::set<std::string> seen(hop_path.begin(), hop_path.end());
    if (seen.size() != hop_path.size()) throw std::invalid_argument("request " + request_id + ": hop path revisits an agent");
  }

  friend bool operator==(const RatingRequest&, const RatingRequest&) = default;
};

struct RatingResponse {
  std::string request_id;
  std::string sender;
  std::string receiver;
  std::string about;
  std::vector<Rating> ratings;
  /// The answering agent followed by every relay so far.
  std::vector<std::string> chain;

  friend bool operator==(const RatingResponse&, const RatingResponse&) = default;
};

/// Per-agent protocol bookkeeping.
struct ExchangeState {
  std::set<std::string> handled;                        // request ids answered or originated
  std::map<std::string, std::string> route;             // request id -> previous hop toward the origin
  std::map<std::string, std::set<std::string>> gathered;  // own request id -> rating ids received
  std::uint64_t next_request = 0;
  std::uint64_t ignored_requests = 0;
  std::uint64_t blocked_responses = 0;
  std::uint64_t unknown_responses = 0;
};

/// One request per white-list member, each with the full hop budget.
inline std::vector<RatingRequest> initiate_request(const AgentTrustState& state, ExchangeState& ex,
                                                   const std::string& about, int ttl_limit) {
  if (ttl_limit < 0) throw std::invalid_argument("ttl_limit must be non-negative");
  const std::string id = state.self() + "#" + std::to_string(++ex.next_request);
  ex.handled.insert(id);
  ex.gathered[id];
  std::vector<RatingRequest> out;
  for (const auto& member : state.whitelist())
    out.push_back({id, state.self(), state.self(), member, about, ttl_limit, {state.self()}});
  return out;
}

struct RequestOutcome {
  bool accepted = false;
  std::vector<RatingResponse> responses;
  std::vector<RatingRequest> forwards;
};

/// Requests from black-listed senders are ignored outright. A request id is
/// served once; later copies arriving over other paths are dropped.
inline RequestOutcome handle_request(const AgentTrustState& state, ExchangeState& ex, const RatingRequest& req) {
  RequestOutcome out;
  if (state.blacklisted(req.sender)) {
    ++ex.ignored_requests;
    return out;
  }
  if (!ex.handled.insert(req.request_id).second) return out;
  out.accepted = true;
  ex.route[req.request_id] = req.sender;
  auto own = state.own_ratings_about(req.about);
  if (!own.empty())
    out.responses.push_back({req.request_id, state.self(), req.sender, req.about, std::move(own), {state.self()}});
  if (req.ttl > 0) {
    std::set<std::string> path(req.hop_path.begin(), req.hop_path.end());
    for (const auto& member : state.whitelist()) {
      if (path.count(member) || state.blacklisted(member)) continue;
      RatingRequest fwd = req;
      fwd.sender = state.self();
      fwd.receiver = member;
      fwd.ttl = req.ttl - 1;
      fwd.hop_path.push_back(state.self());
      out.forwards.push_back(std::move(fwd));
    }
  }
  return out;
}

/// The origin stores the carried ratings unless some agent on the delivery
/// chain is on its black list; intermediate agents only relay. Returns the
/// relayed copy, if any.
inline std::optional<RatingResponse> handle_response(AgentTrustState& state, ExchangeState& ex,
                                                     const RatingResponse& resp) {
  auto own = ex.gathered.find(resp.request_id);
  auto via = ex.route.find(resp.request_id);
  if (own == ex.gathered.end() && via == ex.route.end()) {
    ++ex.unknown_responses;
    return std::nullopt;
  }
  if (state.blacklisted(resp.sender)) {
    ++ex.blocked_responses;
    return std::nullopt;
  }
  if (own != ex.gathered.end()) {
    for (const auto& agent : resp.chain) {
      if (state.blacklisted(agent)) {
        ++ex.blocked_responses;
        return std::nullopt;
      }
    }
    for (const auto& r : resp.ratings) {
      if (r.trustee != resp.about) continue;
      state.record_rating(r, resp.chain);
      own->second.insert(r.id);
    }
    return std::nullopt;
  }
  RatingResponse relay = resp;
  relay.sender = state.self();
  relay.receiver = via->second;
  relay.chain.push_back(state.self());
  return relay;
}

/// In-memory message passing between agents in synchronous rounds: whatever
/// is sent while delivering round k arrives in round k+1, in send order.
class SimNetwork {
 public:
  using Message = std::variant<RatingRequest, RatingResponse>;

  struct Delivery {
    std::uint64_t round = 0;
    bool request = true;
    std::string request_id;
    std::string sender;
    std::string receiver;
    std::string about;
    int ttl = 0;
    bool accepted = false;
  };

  void add_agent(AgentTrustState& state) {
    if (!nodes_.emplace(state.self(), Node{&state, {}}).second)
      throw Error("agent " + state.self() + " already on the network");
  }

  bool contains(const std::string& agent) const { return nodes_.count(agent) > 0; }
  ExchangeState& exchange(const std::string& agent) { return node(agent).exchange; }
  AgentTrustState& trust(const std::string& agent) { return *node(agent).trust; }

  /// Queues the origin's requests for the next round and returns the request id.
  std::string initiate(const std::string& origin, const std::string& about, int ttl_limit) {
    Node& n = node(origin);
    auto requests = initiate_request(*n.trust, n.exchange, about, ttl_limit);
    const std::string id = origin + "#" + std::to_string(n.exchange.next_request);
    for (auto& r : requests) send(std::move(r));
    return id;
  }

  void set_trace(std::ostream* trace) { trace_ = trace; }

  /// Delivers everything queued and returns what was delivered.
  std::vector<Delivery> step() {
    ++round_;
    std::vector<Message> current;
    current.swap(outbox_);
    std::vector<Delivery> delivered;
    delivered.reserve(current.size());
    for (auto& msg : current) {
      if (auto* req = std::get_if<RatingRequest>(&msg)) {
        Node& n = node(req->receiver);
        auto outcome = handle_request(*n.trust, n.exchange, *req);
        delivered.push_back({round_, true, req->request_id, req->sender, req->receiver, req->about, req->ttl,
                             outcome.accepted});
        for (auto& r : outcome.responses) send(std::move(r));
        for (auto& f : outcome.forwards) send(std::move(f));
      } else {
        auto& resp = std::get<RatingResponse>(msg);
        Node& n = node(resp.receiver);
        delivered.push_back({round_, false, resp.request_id, resp.sender, resp.receiver, resp.about, -1, true});
        if (auto relay = handle_response(*n.trust, n.exchange, resp)) send(std::move(*relay));
      }
      if (trace_) {
        const Delivery& d = delivered.back();
        *trace_ << d.round << ',' << (d.request ? "request" : "response") << ',' << d.sender << ',' << d.receiver
                << ',' << d.about << ',';
        if (d.request) *trace_ << d.ttl; else *trace_ << '-';
        *trace_ << '\n';
      }
    }
    delivered_total_ += delivered.size();
    return delivered;
  }

  bool idle() const { return outbox_.empty(); }

  /// Steps until nothing is in flight or `max_rounds` rounds have passed.
  /// Returns the number of messages delivered.
  std::size_t run(std::size_t max_rounds) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < max_rounds && !idle(); ++i) count += step().size();
    return count;
  }

  /// Ratings the origin received for `request_id` after at most
  /// `rounds_budget` more rounds.
  std::vector<Rating> collect(const std::string& origin, const std::string& request_id, std::size_t rounds_budget) {
    run(rounds_budget);
    Node& n = node(origin);
    std::vector<Rating> out;
    auto it = n.exchange.gathered.find(request_id);
    if (it == n.exchange.gathered.end()) return out;
    for (const auto& id : it->second) out.push_back(n.trust->find(id)->rating);
    return out;
  }

  std::uint64_t round() const { return round_; }
  std::uint64_t delivered_total() const { return delivered_total_; }

 private:
  struct Node {
    AgentTrustState* trust;
    ExchangeState exchange;
  };

  Node& node(const std::string& agent) {
    auto it = nodes_.find(agent);
    if (it == nodes_.end()) throw Error("no agent " + agent + " on the network");
    return it->second;
  }

  void send(Message msg) { outbox_.push_back(std::move(msg)); }

  std::map<std::string, Node> nodes_;
  std::vector<Message> outbox_;
  std::uint64_t round_ = 0;
  std::uint64_t delivered_total_ = 0;
  std::ostream* trace_ = nullptr;
};

}  // namespace disarm
