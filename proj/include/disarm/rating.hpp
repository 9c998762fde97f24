#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "disarm/ast.hpp"
#include "disarm/dposl.hpp"

namespace disarm {

enum class Coefficient : std::uint8_t { response_time, validity, completeness, correctness, cooperation, outcome_feeling };

inline constexpr std::size_t kCoefficientCount = 6;

inline constexpr std::array<Coefficient, kCoefficientCount> kCoefficients = {
    Coefficient::response_time, Coefficient::validity,    Coefficient::completeness,
    Coefficient::correctness,   Coefficient::cooperation, Coefficient::outcome_feeling};

inline const char* coefficient_name(Coefficient c) {
  static const char* const names[] = {"response_time", "validity",    "completeness",
                                      "correctness",   "cooperation", "outcome_feeling"};
  return names[static_cast<int>(c)];
}

inline Coefficient parse_coefficient(const std::string& name) {
  for (auto c : kCoefficients)
    if (name == coefficient_name(c)) return c;
  throw std::invalid_argument("unknown coefficient '" + name + "'");
}

inline constexpr double kMinScore = 0.1;
inline constexpr double kMaxScore = 10.0;

/// One evaluation of a trustee by a truster after an interaction.
struct Rating {
  std::string id;
  std::string truster;
  std::string trustee;
  std::int64_t time = 1;
  std::array<double, kCoefficientCount> scores{};
  double confidence = 1.0;
  double transaction_value = 1.0;

  double score(Coefficient c) const { return scores[static_cast<std::size_t>(c)]; }

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const {
    if (id.empty()) throw std::invalid_argument("rating without id");
    if (truster.empty() || trustee.empty()) throw std::invalid_argument("rating " + id + " lacks truster or trustee");
    if (truster == trustee)
      throw std::invalid_argument("rating " + id + ": truster and trustee must differ");
    if (time < 1) throw std::invalid_argument("rating " + id + ": time must be at least 1");
    for (auto c : kCoefficients) {
      const double s = score(c);
      if (!(s >= kMinScore && s <= kMaxScore))
        throw std::invalid_argument("rating " + id + ": " + coefficient_name(c) + " outside [0.1, 10]");
    }
    if (!(confidence >= 0.0 && confidence <= 1.0)) throw std::invalid_argument("rating " + id + ": confidence outside [0, 1]");
    if (!(transaction_value >= 0.0 && transaction_value <= 1.0))
      throw std::invalid_argument("rating " + id + ": transaction_value outside [0, 1]");
  }

  /// Fact form used by the rule corpus (the timestamp slot is `time`).
  Literal to_literal() const {
    Literal lit;
    lit.predicate = "rating";
    lit.args.emplace("id", Symbol{id});
    lit.args.emplace("truster", Symbol{truster});
    lit.args.emplace("trustee", Symbol{trustee});
    lit.args.emplace("time", Number(time));
    for (auto c : kCoefficients) lit.args.emplace(coefficient_name(c), Number::from_double(score(c)));
    lit.args.emplace("confidence", Number::from_double(confidence));
    lit.args.emplace("transaction_value", Number::from_double(transaction_value));
    return lit;
  }

  static Rating from_literal(const Literal& lit) {
    if (lit.predicate != "rating" || lit.negated()) throw std::invalid_argument("not a rating fact: " + to_string(lit));
    auto get = [&](const char* key) -> const Term& {
      auto it = lit.args.find(key);
      if (it == lit.args.end()) throw std::invalid_argument(std::string("rating fact lacks '") + key + "'");
      return it->second;
    };
    auto text = [&](const char* key) {
      const Term& t = get(key);
      if (const auto* s = std::get_if<Symbol>(&t)) return s->name;
      if (const auto* n = std::get_if<Number>(&t)) return n->to_string();
      throw std::invalid_argument(std::string("rating slot '") + key + "' is a variable");
    };
    auto number = [&](const char* key) {
      const auto* n = std::get_if<Number>(&get(key));
      if (!n) throw std::invalid_argument(std::string("rating slot '") + key + "' is not a number");
      return *n;
    };
    Rating r;
    r.id = text("id");
    r.truster = text("truster");
    r.trustee = text("trustee");
    const Number t = number(lit.args.count("time") ? "time" : "t");
    if (!t.is_integer()) throw std::invalid_argument("rating time must be an integer");
    r.time = t.numerator();
    for (auto c : kCoefficients) r.scores[static_cast<std::size_t>(c)] = number(coefficient_name(c)).to_double();
    r.confidence = number("confidence").to_double();
    r.transaction_value = number("transaction_value").to_double();
    return r;
  }

  friend bool operator==(const Rating&, const Rating&) = default;
};

/// Lowest accepted value per coefficient plus the eligibility thresholds.
struct Thresholds {
  std::array<double, kCoefficientCount> coefficient{5.0, 5.0, 5.0, 5.0, 5.0, 5.0};
  double confidence = 0.7;
  double transaction_value = 0.5;

  double of(Coefficient c) const { return coefficient[static_cast<std::size_t>(c)]; }

  void validate() const {
    for (auto c : kCoefficients)
      if (!(of(c) >= kMinScore && of(c) <= kMaxScore))
        throw std::invalid_argument(std::string(coefficient_name(c)) + "_threshold outside [0.1, 10]");
    if (!(confidence >= 0.0 && confidence <= 1.0)) throw std::invalid_argument("confidence_threshold outside [0, 1]");
    if (!(transaction_value >= 0.0 && transaction_value <= 1.0))
      throw std::invalid_argument("transaction_value_threshold outside [0, 1]");
  }

  /// `response_time_threshold(5).` ... `transaction_value_threshold(0.5).`
  std::vector<Literal> to_facts() const {
    std::vector<Literal> out;
    auto fact = [&](std::string pred, double v) {
      Literal lit;
      lit.predicate = std::move(pred);
      lit.args.emplace("0", Number::from_double(v));
      out.push_back(std::move(lit));
    };
    for (auto c : kCoefficients) fact(std::string(coefficient_name(c)) + "_threshold", of(c));
    fact("confidence_threshold", confidence);
    fact("transaction_value_threshold", transaction_value);
    return out;
  }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

inline Literal self_fact(const std::string& agent) {
  Literal lit;
  lit.predicate = "self";
  lit.args.emplace("agent", Symbol{agent});
  return lit;
}

}  // namespace disarm
