#pragma once

// Estimation helpers and a long double oracle that recomputes the estimate
// and its deviation straight from the rating tuples.

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "disarm/estimator.hpp"

namespace testsupport {

using namespace disarm;

inline Rating make(std::string id, std::string truster, std::int64_t t, double all, double conf = 0.9, double tran = 0.9) {
  Rating r;
  r.id = std::move(id);
  r.truster = std::move(truster);
  r.trustee = "x";
  r.time = t;
  r.scores.fill(all);
  r.confidence = conf;
  r.transaction_value = tran;
  return r;
}

inline RatingRefs refs(const std::deque<Rating>& rs) {
  RatingRefs out;
  for (const auto& r : rs) out.push_back(&r);
  return out;
}

inline std::vector<std::string> ids(const RatingRefs& rs) {
  std::vector<std::string> out;
  for (const Rating* r : rs) out.push_back(r->id);
  std::sort(out.begin(), out.end());
  return out;
}

inline CategorizedPool only(Source s, const RatingRefs& rs) {
  CategorizedPool p;
  p[s] = rs;
  return p;
}

inline EstimationConfig uniform() {
  EstimationConfig c;
  c.weights.fill(1.0);
  return c;
}

// Recomputes the estimate from raw tuples, one rating at a time.
inline long double oracle_value(const CategorizedPool& p, const EstimationConfig& c) {
  long double wsum = 0;
  for (double w : c.weights) wsum += w;
  long double num = 0, den = 0;
  for (auto s : kSources) {
    if (p[s].empty()) continue;
    long double tsum = 0;
    for (const Rating* r : p[s]) tsum += r->time;
    long double score = 0;
    for (const Rating* r : p[s]) {
      long double mix = 0;
      for (std::size_t k = 0; k < 6; ++k) mix += c.weights[k] * std::log10((long double)r->scores[k]);
      score += mix / wsum * r->time / tsum;
    }
    num += c.social[static_cast<int>(s)] * score;
    den += c.social[static_cast<int>(s)];
  }
  return num / den;
}

inline long double oracle_sigma(const CategorizedPool& p) {
  std::vector<long double> xs;
  for (const auto& src : p.sources)
    for (const Rating* r : src)
      for (double v : r->scores) xs.push_back(std::log10((long double)v));
  long double sum = 0, sq = 0;
  for (auto x : xs) {
    sum += x;
    sq += x * x;
  }
  const long double n = xs.size();
  const long double var = sq / n - (sum / n) * (sum / n);
  return var <= 0 ? 0 : std::sqrt(var);
}

inline Rating random_rating(std::mt19937_64& rng, int i, const char* truster = nullptr) {
  std::uniform_real_distribution<double> score(0.1, 10.0), unit(0, 1);
  static const char* trusters[] = {"me", "k1", "k2", "k3", "s1", "s2"};
  Rating r;
  r.id = "q" + std::to_string(i);
  r.truster = truster ? truster : trusters[rng() % 6];
  r.trustee = "x";
  r.time = 1 + static_cast<std::int64_t>(rng() % 50);
  for (auto& v : r.scores) v = score(rng);
  r.confidence = unit(rng);
  r.transaction_value = unit(rng);
  return r;
}


}  // namespace testsupport
