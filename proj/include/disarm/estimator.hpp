#pragma once

// Reputation estimation from a pool of ratings about one trustee:
// eligibility, time filtering, source categorization, participation theory,
// then the time-weighted log-score aggregate and its spread.

#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "disarm/rating.hpp"
#include "disarm/trust_state.hpp"

namespace disarm {

enum class Source : std::uint8_t { pr, wr, kr, sr };

inline constexpr std::array<Source, 4> kSources = {Source::pr, Source::wr, Source::kr, Source::sr};

inline const char* source_name(Source s) {
  static const char* const names[] = {"pr", "wr", "kr", "sr"};
  return names[static_cast<int>(s)];
}

/// Ordered partition of the four sources. The first group holding any
/// rating participates as a whole.
struct Theory {
  std::string name;
  std::vector<std::vector<Source>> groups;

  static Theory all_count() { return {"t1", {{Source::pr, Source::wr, Source::kr, Source::sr}}}; }
  static Theory strict_order() { return {"t2", {{Source::pr}, {Source::wr}, {Source::kr}, {Source::sr}}}; }
  static Theory grouped() { return {"t3", {{Source::pr, Source::wr}, {Source::kr}, {Source::sr}}}; }

  static Theory by_name(const std::string& name) {
    if (name == "t1") return all_count();
    if (name == "t2") return strict_order();
    if (name == "t3") return grouped();
    throw std::invalid_argument("unknown theory '" + name + "' (expected t1, t2 or t3)");
  }

  void validate() const {
    std::array<int, 4> seen{};
    for (const auto& g : groups) {
      if (g.empty()) throw std::invalid_argument("theory " + name + " has an empty group");
      for (auto s : g) ++seen[static_cast<int>(s)];
    }
    for (auto s : kSources)
      if (seen[static_cast<int>(s)] != 1)
        throw std::invalid_argument("theory " + name + ": source " + source_name(s) + " must appear exactly once");
  }
};

struct TimeFilter {
  enum class Kind : std::uint8_t { interval, since, window };
  Kind kind = Kind::since;
  std::int64_t from = 1;
  std::int64_t to = 0;
  std::int64_t width = 0;

  static TimeFilter interval(std::int64_t from, std::int64_t to) { return {Kind::interval, from, to, 0}; }
  static TimeFilter since(std::int64_t from) { return {Kind::since, from, 0, 0}; }
  static TimeFilter window(std::int64_t width) { return {Kind::window, 0, 0, width}; }

  void validate() const {
    if (kind == Kind::interval && from > to) throw std::invalid_argument("interval filter with from > to");
    if (kind == Kind::window && width < 0) throw std::invalid_argument("window filter with negative width");
  }

  bool keeps(std::int64_t t, std::int64_t now) const {
    switch (kind) {
      case Kind::interval: return from <= t && t <= to;
      case Kind::since: return from <= t;
      case Kind::window: return now - width <= t;
    }
    return false;
  }

  std::string id() const {
    switch (kind) {
      case Kind::interval: return "interval(" + std::to_string(from) + "," + std::to_string(to) + ")";
      case Kind::since: return "since(" + std::to_string(from) + ")";
      case Kind::window: return "window(" + std::to_string(width) + ")";
    }
    return "";
  }
};

enum class SigmaMode : std::uint8_t {
  pooled_normalized,   // every (rating, coefficient) log score in one population
  pooled_raw,          // same population, raw scores
  per_coefficient,     // mean of the six per-coefficient deviations of log scores
};

/// Response time 20%, validity 50%, completeness, correctness and
/// cooperation 10% each, outcome feeling 0%.
inline std::array<double, kCoefficientCount> example_weight_profile() { return {20, 50, 10, 10, 10, 0}; }

struct EstimationConfig {
  std::array<double, kCoefficientCount> weights = example_weight_profile();
  std::array<double, 4> social = {0.4, 0.3, 0.2, 0.1};  // pr, wr, kr, sr
  Theory theory = Theory::grouped();
  TimeFilter filter = TimeFilter::since(1);
  Thresholds thresholds;
  SigmaMode sigma_mode = SigmaMode::pooled_normalized;

  double social_weight(Source s) const { return social[static_cast<int>(s)]; }

  void validate() const {
    double wsum = 0, psum = 0;
    for (double w : weights) {
      if (!(w >= 0) || !std::isfinite(w)) throw std::invalid_argument("coefficient weights must be non-negative");
      wsum += w;
    }
    for (double p : social) {
      if (!(p >= 0) || !std::isfinite(p)) throw std::invalid_argument("social weights must be non-negative");
      psum += p;
    }
    if (!(wsum > 0)) throw std::invalid_argument("coefficient weights are all zero");
    if (!(psum > 0)) throw std::invalid_argument("social weights are all zero");
    theory.validate();
    filter.validate();
    thresholds.validate();
  }
};

using RatingRefs = std::vector<const Rating*>;

struct CategorizedPool {
  std::array<RatingRefs, 4> sources;

  RatingRefs& operator[](Source s) { return sources[static_cast<int>(s)]; }
  const RatingRefs& operator[](Source s) const { return sources[static_cast<int>(s)]; }
  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& s : sources) n += s.size();
    return n;
  }
  bool empty() const { return size() == 0; }
};

/// Strongest eligibility rule that fires: r26 (both thresholds met), r27
/// (confidence), r28 (transaction value), or none.
inline std::optional<std::string> eligibility_rule(const Rating& r, const Thresholds& th) {
  const bool conf = r.confidence >= th.confidence;
  const bool tran = r.transaction_value >= th.transaction_value;
  if (conf && tran) return "r26";
  if (conf) return "r27";
  if (tran) return "r28";
  return std::nullopt;
}

inline RatingRefs eligible(const RatingRefs& pool, const Thresholds& th) {
  RatingRefs out;
  for (const Rating* r : pool)
    if (eligibility_rule(*r, th)) out.push_back(r);
  return out;
}

inline RatingRefs count_filter(const RatingRefs& pool, const TimeFilter& filter, std::int64_t now) {
  filter.validate();
  RatingRefs out;
  for (const Rating* r : pool)
    if (filter.keeps(r->time, now)) out.push_back(r);
  return out;
}

/// What categorization needs to know about the estimating agent.
struct SocialView {
  std::string self;
  std::set<std::string> known;
  std::set<std::string> whitelist;
  std::set<std::string> blacklist;

  static SocialView of(const AgentTrustState& s) { return {s.self(), s.known_agents(), s.whitelist(), s.blacklist()}; }
};

/// Ratings by black-listed trusters land in no category.
inline CategorizedPool categorize(const SocialView& view, const RatingRefs& pool) {
  CategorizedPool out;
  for (const Rating* r : pool) {
    const std::string& a = r->truster;
    if (a == view.self) out[Source::pr].push_back(r);
    else if (view.blacklist.count(a)) continue;
    else if (!view.known.count(a)) out[Source::sr].push_back(r);
    else if (view.whitelist.count(a)) out[Source::wr].push_back(r);
    else out[Source::kr].push_back(r);
  }
  return out;
}

inline CategorizedPool categorize(const AgentTrustState& state, const RatingRefs& pool) {
  CategorizedPool out;
  for (const Rating* r : pool) {
    const std::string& a = r->truster;
    if (a == state.self()) out[Source::pr].push_back(r);
    else if (state.blacklisted(a)) continue;
    else if (!state.known_agents().count(a)) out[Source::sr].push_back(r);
    else if (state.whitelisted(a)) out[Source::wr].push_back(r);
    else out[Source::kr].push_back(r);
  }
  return out;
}

inline CategorizedPool select_participants(const CategorizedPool& cat, const Theory& theory) {
  for (const auto& group : theory.groups) {
    bool any = false;
    for (auto s : group) any = any || !cat[s].empty();
    if (!any) continue;
    CategorizedPool out;
    for (auto s : group) out[s] = cat[s];
    return out;
  }
  return {};
}

inline double normalize(double score) {
  if (!(score >= kMinScore && score <= kMaxScore)) throw std::invalid_argument("score outside [0.1, 10]");
  return std::log10(score);
}

struct ReputationReport {
  double value = 0;
  double sigma = 0;
  CategorizedPool participating;
  std::map<Source, double> per_category;

  /// `trustee,value,sigma,pr=N,wr=N,kr=N,sr=N,theory,filter`
  std::string to_record(const std::string& trustee, const EstimationConfig& config) const {
    std::ostringstream out;
    out << trustee << ',' << std::fixed << std::setprecision(6) << value << ',' << sigma;
    for (auto s : kSources) out << ',' << source_name(s) << '=' << participating[s].size();
    out << ',' << config.theory.name << ',' << config.filter.id();
    return out.str();
  }
};

namespace estimator_detail {

inline double deviation(const std::vector<double>& xs) {
  bool all_equal = true;
  for (double x : xs) all_equal = all_equal && x == xs.front();
  if (all_equal) return 0.0;
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace estimator_detail

/// Spread of the participating scores; nullopt when nothing participates.
inline std::optional<double> confidence_sigma(const CategorizedPool& participants,
                                              SigmaMode mode = SigmaMode::pooled_normalized) {
  if (participants.empty()) return std::nullopt;
  if (mode == SigmaMode::per_coefficient) {
    double total = 0;
    for (auto c : kCoefficients) {
      std::vector<double> xs;
      for (const auto& src : participants.sources)
        for (const Rating* r : src) xs.push_back(normalize(r->score(c)));
      total += estimator_detail::deviation(xs);
    }
    return total / static_cast<double>(kCoefficientCount);
  }
  std::vector<double> xs;
  xs.reserve(participants.size() * kCoefficientCount);
  for (const auto& src : participants.sources)
    for (const Rating* r : src)
      for (auto c : kCoefficients) xs.push_back(mode == SigmaMode::pooled_raw ? r->score(c) : normalize(r->score(c)));
  return estimator_detail::deviation(xs);
}

/// Value in [-1, 1]; nullopt when nothing participates. Every participating
/// rating must be older than `now`.
inline std::optional<ReputationReport> estimate(const CategorizedPool& participants, const EstimationConfig& config,
                                                std::int64_t now, bool with_sigma = true) {
  if (participants.empty()) return std::nullopt;
  double wsum = 0;
  for (double w : config.weights) wsum += w;
  ReputationReport report;
  report.participating = participants;
  double weighted = 0, present = 0;
  for (auto s : kSources) {
    const RatingRefs& rs = participants[s];
    if (rs.empty()) continue;
    std::array<double, kCoefficientCount> num{};
    double tsum = 0;
    for (const Rating* r : rs) {
      if (r->time >= now) throw std::invalid_argument("rating " + r->id + " is not older than now");
      const double t = static_cast<double>(r->time);
      for (auto c : kCoefficients) num[static_cast<int>(c)] += normalize(r->score(c)) * t;
      tsum += t;
    }
    double category = 0;
    for (std::size_t k = 0; k < kCoefficientCount; ++k) category += config.weights[k] * (num[k] / tsum);
    category /= wsum;
    report.per_category[s] = category;
    weighted += config.social_weight(s) * category;
    present += config.social_weight(s);
  }
  if (!(present > 0)) throw std::invalid_argument("social weights of the present categories sum to zero");
  report.value = weighted / present;
  if (with_sigma) report.sigma = *confidence_sigma(participants, config.sigma_mode);
  return report;
}

/// The whole pipeline for one trustee from the agent's repository.
inline std::optional<ReputationReport> reputation(const AgentTrustState& state, const std::string& trustee,
                                                  const EstimationConfig& config, std::int64_t now) {
  const RatingRefs pool = count_filter(eligible(state.rating_refs_about(trustee), config.thresholds), config.filter, now);
  return estimate(select_participants(categorize(state, pool), config.theory), config, now);
}

}  // namespace disarm
