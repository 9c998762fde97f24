#pragma once

// Seeded multi-agent simulation: providers of four quality classes, consumers
// choosing providers by policy, per-round utility, storage and message logs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "disarm/estimator.hpp"
#include "disarm/exchange.hpp"
#include "disarm/rating.hpp"
#include "disarm/trust_state.hpp"

namespace disarm {

enum class ProviderClass : std::uint8_t { good, ordinary, intermittent, bad };

inline constexpr std::array<ProviderClass, 4> kProviderClasses = {ProviderClass::good, ProviderClass::ordinary,
                                                                  ProviderClass::intermittent, ProviderClass::bad};

inline const char* class_name(ProviderClass c) {
  static const char* const names[] = {"good", "ordinary", "intermittent", "bad"};
  return names[static_cast<int>(c)];
}

/// Scores are drawn uniformly from mean +- spread and clamped to [0.1, 10];
/// intermittent providers draw uniformly over the whole range.
struct ProviderProfile {
  ProviderClass cls = ProviderClass::good;
  std::array<double, kCoefficientCount> mean{};
  std::array<double, kCoefficientCount> spread{};

  static ProviderProfile uniform(ProviderClass cls, double mean, double spread) {
    ProviderProfile p;
    p.cls = cls;
    p.mean.fill(mean);
    p.spread.fill(spread);
    return p;
  }

  static ProviderProfile standard(ProviderClass cls) {
    switch (cls) {
      case ProviderClass::good: return uniform(cls, 8.5, 1.0);
      case ProviderClass::ordinary: return uniform(cls, 5.5, 1.5);
      case ProviderClass::intermittent: return uniform(cls, 5.05, 4.95);
      case ProviderClass::bad: return uniform(cls, 2.0, 1.5);
    }
    return {};
  }

  void validate() const {
    for (std::size_t k = 0; k < kCoefficientCount; ++k) {
      if (!(mean[k] >= kMinScore && mean[k] <= kMaxScore))
        throw std::invalid_argument(std::string(class_name(cls)) + " profile mean outside [0.1, 10]");
      if (!(spread[k] >= 0)) throw std::invalid_argument(std::string(class_name(cls)) + " profile spread is negative");
    }
  }
};

inline double round_cents(double v) { return std::round(v * 100.0) / 100.0; }

/// Mean of the six scores mapped to [0, 1], times 10.
inline double utility_gain(const std::array<double, kCoefficientCount>& scores) {
  double sum = 0;
  for (double s : scores) sum += (s - kMinScore) / (kMaxScore - kMinScore);
  return sum / static_cast<double>(kCoefficientCount) * 10.0;
}

struct Performance {
  std::array<double, kCoefficientCount> scores{};
  double ug = 0;
};

template <class Rng>
Performance provider_perform(const ProviderProfile& profile, Rng& rng) {
  Performance p;
  for (std::size_t k = 0; k < kCoefficientCount; ++k) {
    double lo = profile.mean[k] - profile.spread[k], hi = profile.mean[k] + profile.spread[k];
    if (profile.cls == ProviderClass::intermittent) {
      lo = kMinScore;
      hi = kMaxScore;
    }
    const double v = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
    p.scores[k] = std::clamp(round_cents(v), kMinScore, kMaxScore);
  }
  p.ug = utility_gain(p.scores);
  return p;
}

/// Distributions of the confidence and transaction value a rater attaches.
struct RaterConfig {
  double confidence_min = 0.4, confidence_max = 1.0;
  double transaction_min = 0.0, transaction_max = 1.0;

  void validate() const {
    if (!(0 <= confidence_min && confidence_min <= confidence_max && confidence_max <= 1))
      throw std::invalid_argument("confidence range must lie within [0, 1]");
    if (!(0 <= transaction_min && transaction_min <= transaction_max && transaction_max <= 1))
      throw std::invalid_argument("transaction value range must lie within [0, 1]");
  }
};

/// Honest rating: coefficients are exactly the observed performance.
template <class Rng>
Rating rate_interaction(const std::string& id, const std::string& truster, const std::string& trustee,
                        const Performance& performance, std::int64_t round, const RaterConfig& rater, Rng& rng) {
  Rating r;
  r.id = id;
  r.truster = truster;
  r.trustee = trustee;
  r.time = round;
  r.scores = performance.scores;
  auto draw = [&](double lo, double hi) {
    return lo == hi ? lo : round_cents(std::uniform_real_distribution<double>(lo, hi)(rng));
  };
  r.confidence = std::clamp(draw(rater.confidence_min, rater.confidence_max), 0.0, 1.0);
  r.transaction_value = std::clamp(draw(rater.transaction_min, rater.transaction_max), 0.0, 1.0);
  return r;
}

enum class PolicyKind : std::uint8_t { disarm, direct_only, none };

struct ConsumerPolicy {
  PolicyKind kind = PolicyKind::none;
  Theory theory = Theory::grouped();

  static ConsumerPolicy disarm(Theory t) { return {PolicyKind::disarm, std::move(t)}; }
  static ConsumerPolicy direct_only() { return {PolicyKind::direct_only, Theory::strict_order()}; }
  static ConsumerPolicy none() { return {PolicyKind::none, Theory::all_count()}; }

  static ConsumerPolicy by_name(const std::string& name) {
    if (name == "none") return none();
    if (name == "direct") return direct_only();
    return disarm(Theory::by_name(name));
  }

  std::string name() const {
    switch (kind) {
      case PolicyKind::disarm: {
        std::string t = theory.name;
        for (auto& ch : t) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        return "DISARM-" + t;
      }
      case PolicyKind::direct_only: return "DIRECT_ONLY";
      case PolicyKind::none: return "NONE";
    }
    return "";
  }

  /// Stable index used to derive random streams, independent of which
  /// policies a run includes.
  std::uint32_t stream_id() const {
    switch (kind) {
      case PolicyKind::disarm: return theory.name == "t1" ? 0 : theory.name == "t2" ? 1 : theory.name == "t3" ? 2 : 5;
      case PolicyKind::direct_only: return 3;
      case PolicyKind::none: return 4;
    }
    return 6;
  }
};

inline std::vector<ConsumerPolicy> default_policies() {
  return {ConsumerPolicy::disarm(Theory::all_count()), ConsumerPolicy::disarm(Theory::strict_order()),
          ConsumerPolicy::disarm(Theory::grouped()), ConsumerPolicy::direct_only(), ConsumerPolicy::none()};
}

struct SimConfig {
  int providers = 40;
  std::array<double, 4> densities = {0.15, 0.30, 0.15, 0.40};  // good, ordinary, intermittent, bad
  std::array<ProviderProfile, 4> profiles = {
      ProviderProfile::standard(ProviderClass::good), ProviderProfile::standard(ProviderClass::ordinary),
      ProviderProfile::standard(ProviderClass::intermittent), ProviderProfile::standard(ProviderClass::bad)};
  /// How providers perceive consumers when rating them back.
  ProviderProfile consumer_profile = ProviderProfile::standard(ProviderClass::good);
  int consumers_per_policy = 5;
  std::vector<ConsumerPolicy> policies = default_policies();
  int rounds = 200;
  std::uint64_t seed = 1;
  int ttl = 2;
  /// Unrated, non-black-listed providers a DISARM consumer asks about per round.
  int locate_per_round = 2;
  EstimationConfig estimation;
  RaterConfig rater;

  void validate() const {
    if (providers < 1) throw std::invalid_argument("providers must be at least 1");
    if (consumers_per_policy < 0) throw std::invalid_argument("consumers_per_policy must be non-negative");
    if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
    if (ttl < 0) throw std::invalid_argument("ttl must be non-negative");
    if (locate_per_round < 0) throw std::invalid_argument("locate_per_round must be non-negative");
    double sum = 0;
    for (double d : densities) {
      if (!(d >= 0)) throw std::invalid_argument("densities must be non-negative");
      sum += d;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("densities must sum to 1");
    for (const auto& p : profiles) p.validate();
    consumer_profile.validate();
    std::set<std::string> names;
    for (const auto& p : policies)
      if (!names.insert(p.name()).second) throw std::invalid_argument("policy " + p.name() + " listed twice");
    estimation.validate();
    rater.validate();
  }

  /// Provider counts per class by largest remainder.
  std::array<int, 4> class_counts() const {
    std::array<int, 4> counts{};
    std::array<double, 4> rest{};
    int assigned = 0;
    for (int i = 0; i < 4; ++i) {
      const double exact = densities[i] * providers;
      counts[i] = static_cast<int>(std::floor(exact + 1e-9));
      rest[i] = exact - counts[i];
      assigned += counts[i];
    }
    while (assigned < providers) {
      const int i = static_cast<int>(std::max_element(rest.begin(), rest.end()) - rest.begin());
      ++counts[i];
      rest[i] = -1;
      ++assigned;
    }
    return counts;
  }
};

struct ConsumerRound {
  std::string consumer;
  std::string policy;
  std::string provider;
  double ug = 0;
};

struct PolicyRound {
  std::string policy;
  double mean_ug = 0;
  double stddev_ug = 0;
  double mean_stored = 0;
  std::size_t max_stored = 0;
};

struct RoundLog {
  int round = 0;
  std::vector<ConsumerRound> consumers;
  std::vector<PolicyRound> policies;
  std::size_t centralized_count = 0;
  std::size_t messages = 0;
};

struct SimResult {
  std::vector<RoundLog> rounds;
  std::vector<std::string> policy_names;

  /// Mean UG over every round and consumer of the policy.
  double mean_ug(const std::string& policy) const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& r : rounds)
      for (const auto& c : r.consumers)
        if (c.policy == policy) {
          sum += c.ug;
          ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
  }

  void write_ug_csv(std::ostream& out) const {
    out << "round,policy,mean_ug,stddev_ug\n" << std::fixed << std::setprecision(6);
    for (const auto& r : rounds)
      for (const auto& p : r.policies) out << r.round << ',' << p.policy << ',' << p.mean_ug << ',' << p.stddev_ug << '\n';
  }

  void write_storage_csv(std::ostream& out) const {
    out << "round,policy,mean_stored,max_stored,centralized_count\n" << std::fixed << std::setprecision(6);
    for (const auto& r : rounds)
      for (const auto& p : r.policies)
        out << r.round << ',' << p.policy << ',' << p.mean_stored << ',' << p.max_stored << ',' << r.centralized_count
            << '\n';
  }

  void write_messages_csv(std::ostream& out) const {
    out << "round,count\n";
    for (const auto& r : rounds) out << r.round << ',' << r.messages << '\n';
  }

  void write_csvs(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    auto write = [&](const char* name, auto fn) {
      std::ofstream f(dir / name, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
      fn(f);
      if (!f) throw std::runtime_error("failed writing " + (dir / name).string());
    };
    write("ug.csv", [&](std::ostream& o) { write_ug_csv(o); });
    write("storage.csv", [&](std::ostream& o) { write_storage_csv(o); });
    write("messages.csv", [&](std::ostream& o) { write_messages_csv(o); });
  }

  void write_summary(std::ostream& out) const {
    out << std::left << std::setw(14) << "policy" << "mean_ug\n";
    for (const auto& p : policy_names)
      out << std::left << std::setw(14) << p << std::fixed << std::setprecision(4) << mean_ug(p) << '\n';
  }
};

/// Independent stream per (agent group, agent, purpose) so one agent's draws
/// never depend on how many other agents exist.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint32_t group, std::uint32_t index, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), group, index, purpose};
  return std::mt19937_64(seq);
}

class Simulation {
 public:
  explicit Simulation(SimConfig config) : config_(std::move(config)) {
    config_.validate();
    setup();
  }

  /// Runs every round; a simulation runs once.
  SimResult run() {
    if (ran_) throw std::logic_error("simulation already ran");
    ran_ = true;
    SimResult result;
    for (const auto& p : config_.policies) result.policy_names.push_back(p.name());
    for (int t = 1; t <= config_.rounds; ++t) result.rounds.push_back(round(t));
    return result;
  }

  const std::vector<ProviderClass>& provider_classes() const { return provider_class_; }
  const std::deque<AgentTrustState>& agents() const { return states_; }

 private:
  enum Purpose : std::uint32_t { choice = 0, observe = 1, rate = 2, classes = 3 };
  static constexpr std::uint32_t kProviderGroup = 100;

  struct Consumer {
    std::size_t policy;
    AgentTrustState* state;
    std::mt19937_64 choice_rng, observe_rng, rate_rng;
    std::uint64_t counter = 0;
  };

  struct Provider {
    AgentTrustState* state;
    std::mt19937_64 rate_rng, observe_rng;
    std::uint64_t counter = 0;
  };

  void setup() {
    const auto counts = config_.class_counts();
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < counts[c]; ++i) provider_class_.push_back(kProviderClasses[c]);
    auto shuffle_rng = stream(config_.seed, kProviderGroup, 0, classes);
    std::shuffle(provider_class_.begin(), provider_class_.end(), shuffle_rng);

    for (int i = 0; i < config_.providers; ++i) {
      const std::string name = "p" + std::to_string(i);
      states_.emplace_back(name, config_.estimation.thresholds);
      network_.add_agent(states_.back());
      providers_.push_back({&states_.back(), stream(config_.seed, kProviderGroup, i, rate),
                            stream(config_.seed, kProviderGroup, i, observe)});
      provider_names_.push_back(name);
    }
    for (std::size_t p = 0; p < config_.policies.size(); ++p) {
      const auto& policy = config_.policies[p];
      std::string tag = policy.name();
      std::transform(tag.begin(), tag.end(), tag.begin(), [](unsigned char ch) { return std::tolower(ch); });
      std::replace(tag.begin(), tag.end(), '-', '_');
      for (int i = 0; i < config_.consumers_per_policy; ++i) {
        states_.emplace_back("c_" + tag + "_" + std::to_string(i), config_.estimation.thresholds);
        network_.add_agent(states_.back());
        const std::uint32_t g = policy.stream_id();
        consumers_.push_back({p, &states_.back(), stream(config_.seed, g, i, choice), stream(config_.seed, g, i, observe),
                              stream(config_.seed, g, i, rate)});
      }
    }
  }

  bool uses_reputation(const Consumer& c) const { return config_.policies[c.policy].kind != PolicyKind::none; }

  std::vector<std::size_t> candidates(const Consumer& c) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < providers_.size(); ++i)
      if (!c.state->blacklisted(provider_names_[i])) out.push_back(i);
    if (out.empty())
      for (std::size_t i = 0; i < providers_.size(); ++i) out.push_back(i);
    return out;
  }

  std::size_t gather() {
    bool any = false;
    for (auto& c : consumers_) {
      if (config_.policies[c.policy].kind != PolicyKind::disarm) continue;
      std::vector<std::size_t> unrated;
      for (std::size_t i : candidates(c))
        if (!c.state->has_own_rating_about(provider_names_[i]) && !c.state->blacklisted(provider_names_[i]))
          unrated.push_back(i);
      std::shuffle(unrated.begin(), unrated.end(), c.choice_rng);
      const std::size_t n = std::min<std::size_t>(unrated.size(), static_cast<std::size_t>(config_.locate_per_round));
      for (std::size_t k = 0; k < n; ++k) {
        network_.initiate(c.state->self(), provider_names_[unrated[k]], config_.ttl);
        any = true;
      }
    }
    if (!any) return 0;
    return network_.run(static_cast<std::size_t>(2 * (config_.ttl + 1) + 2));
  }

  std::size_t choose(Consumer& c, std::int64_t now) {
    if (!uses_reputation(c))
      return std::uniform_int_distribution<std::size_t>(0, providers_.size() - 1)(c.choice_rng);
    const auto cands = candidates(c);
    const bool direct = config_.policies[c.policy].kind == PolicyKind::direct_only;
    EstimationConfig ec = config_.estimation;
    ec.theory = config_.policies[c.policy].theory;
    double best_r = -std::numeric_limits<double>::infinity();
    double best_s = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> ties;
    for (std::size_t i : cands) {
      double r = 0, s = std::numeric_limits<double>::infinity();
      std::optional<ReputationReport> rep;
      if (direct) {
        RatingRefs own;
        for (const Rating* x : c.state->rating_refs_about(provider_names_[i]))
          if (x->truster == c.state->self()) own.push_back(x);
        const RatingRefs pool = count_filter(eligible(own, ec.thresholds), ec.filter, now);
        CategorizedPool p;
        p[Source::pr] = pool;
        rep = estimate(p, ec, now);
      } else {
        rep = reputation(*c.state, provider_names_[i], ec, now);
      }
      if (rep) {
        r = rep->value;
        s = rep->sigma;
      }
      if (r > best_r || (r == best_r && s < best_s)) {
        best_r = r;
        best_s = s;
        ties.assign(1, i);
      } else if (r == best_r && s == best_s) {
        ties.push_back(i);
      }
    }
    if (ties.size() == 1) return ties[0];
    return ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(c.choice_rng)];
  }

  RoundLog round(int t) {
    RoundLog log;
    log.round = t;
    log.messages = gather();

    std::vector<std::size_t> chosen;
    chosen.reserve(consumers_.size());
    for (auto& c : consumers_) chosen.push_back(choose(c, t));

    for (std::size_t k = 0; k < consumers_.size(); ++k) {
      Consumer& c = consumers_[k];
      Provider& p = providers_[chosen[k]];
      const auto cls = provider_class_[chosen[k]];
      const Performance perf = provider_perform(config_.profiles[static_cast<int>(cls)], c.observe_rng);
      const std::string& pname = provider_names_[chosen[k]];
      c.state->record_rating(rate_interaction(c.state->self() + "_" + std::to_string(++c.counter), c.state->self(),
                                              pname, perf, t, config_.rater, c.rate_rng));
      const Performance back = provider_perform(config_.consumer_profile, p.observe_rng);
      p.state->record_rating(rate_interaction(pname + "_" + std::to_string(++p.counter), pname, c.state->self(), back,
                                              t, config_.rater, p.rate_rng));
      centralized_ += 2;
      log.consumers.push_back({c.state->self(), config_.policies[c.policy].name(), pname, perf.ug});
    }
    for (auto& s : states_) s.update_lists(t);

    log.centralized_count = centralized_;
    for (std::size_t p = 0; p < config_.policies.size(); ++p) {
      PolicyRound pr;
      pr.policy = config_.policies[p].name();
      std::vector<double> ugs;
      double stored = 0;
      std::size_t n = 0;
      for (std::size_t k = 0; k < consumers_.size(); ++k) {
        if (consumers_[k].policy != p) continue;
        ugs.push_back(log.consumers[k].ug);
        const std::size_t s = consumers_[k].state->stored_count();
        stored += static_cast<double>(s);
        pr.max_stored = std::max(pr.max_stored, s);
        ++n;
      }
      if (n) {
        double sum = 0;
        for (double u : ugs) sum += u;
        pr.mean_ug = sum / static_cast<double>(n);
        double ss = 0;
        for (double u : ugs) ss += (u - pr.mean_ug) * (u - pr.mean_ug);
        pr.stddev_ug = std::sqrt(ss / static_cast<double>(n));
        pr.mean_stored = stored / static_cast<double>(n);
      }
      log.policies.push_back(pr);
    }
    return log;
  }

  SimConfig config_;
  std::deque<AgentTrustState> states_;
  SimNetwork network_;
  std::vector<Provider> providers_;
  std::vector<std::string> provider_names_;
  std::vector<ProviderClass> provider_class_;
  std::vector<Consumer> consumers_;
  std::size_t centralized_ = 0;
  bool ran_ = false;
};

inline SimResult run_simulation(const SimConfig& config) { return Simulation(config).run(); }

}  // namespace disarm
