#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace disarm {

/// Exact rational number used for rule-language constants and builtin
/// arithmetic. Decimal literals are represented without rounding; the
/// denominator is always positive and the fraction is kept reduced.
class Number {
 public:
  constexpr Number() = default;
  constexpr Number(std::int64_t value) : num_(value) {}  // NOLINT: implicit by design of literals

  static Number ratio(std::int64_t num, std::int64_t den) {
    if (den == 0) throw std::domain_error("division by zero");
    return reduce(num, den);
  }

  /// Parses `[-]digits[.digits]`.
  static Number parse(std::string_view text) {
    bool negative = false;
    std::size_t i = 0;
    if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
      negative = text[i] == '-';
      ++i;
    }
    __int128 num = 0;
    __int128 den = 1;
    bool seen_digit = false;
    bool fraction = false;
    for (; i < text.size(); ++i) {
      const char c = text[i];
      if (c == '.' && !fraction) {
        fraction = true;
        continue;
      }
      if (c < '0' || c > '9') throw std::invalid_argument("malformed number '" + std::string(text) + "'");
      seen_digit = true;
      num = num * 10 + (c - '0');
      if (fraction) den *= 10;
      if (num > kLimit || den > kLimit) throw std::overflow_error("number literal out of range '" + std::string(text) + "'");
    }
    if (!seen_digit) throw std::invalid_argument("malformed number '" + std::string(text) + "'");
    return reduce128(negative ? -num : num, den);
  }

  /// Nearest rational with at most `digits` decimal places.
  static Number from_double(double value, int digits = 6) {
    if (!std::isfinite(value)) throw std::domain_error("non-finite value");
    std::int64_t scale = 1;
    for (int d = 0; d < digits; ++d) scale *= 10;
    const double scaled = std::round(value * static_cast<double>(scale));
    if (std::fabs(scaled) > 9.0e18) throw std::overflow_error("value out of range");
    return reduce(static_cast<std::int64_t>(scaled), scale);
  }

  constexpr std::int64_t numerator() const { return num_; }
  constexpr std::int64_t denominator() const { return den_; }
  constexpr bool is_integer() const { return den_ == 1; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  friend Number operator+(const Number& a, const Number& b) {
    return reduce128(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
                     static_cast<__int128>(a.den_) * b.den_);
  }
  friend Number operator-(const Number& a, const Number& b) {
    return reduce128(static_cast<__int128>(a.num_) * b.den_ - static_cast<__int128>(b.num_) * a.den_,
                     static_cast<__int128>(a.den_) * b.den_);
  }
  friend Number operator*(const Number& a, const Number& b) {
    return reduce128(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
  }
  friend Number operator/(const Number& a, const Number& b) {
    if (b.num_ == 0) throw std::domain_error("division by zero");
    return reduce128(static_cast<__int128>(a.num_) * b.den_, static_cast<__int128>(a.den_) * b.num_);
  }
  Number operator-() const { return reduce(-num_, den_); }

  friend bool operator==(const Number& a, const Number& b) = default;
  friend std::strong_ordering operator<=>(const Number& a, const Number& b) {
    const __int128 lhs = static_cast<__int128>(a.num_) * b.den_;
    const __int128 rhs = static_cast<__int128>(b.num_) * a.den_;
    if (lhs < rhs) return std::strong_ordering::less;
    if (lhs > rhs) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }

  /// Exact decimal text when the denominator has only factors 2 and 5,
  /// otherwise 17 significant digits.
  std::string to_string() const {
    std::int64_t den = den_;
    int twos = 0, fives = 0;
    while (den % 2 == 0) { den /= 2; ++twos; }
    while (den % 5 == 0) { den /= 5; ++fives; }
    if (den != 1) {
      std::ostringstream out;
      out.precision(17);
      out << to_double();
      return out.str();
    }
    const int places = std::max(twos, fives);
    __int128 scaled = static_cast<__int128>(num_);
    // num/den == num * (10^places / den) / 10^places
    __int128 factor = 1;
    for (int i = 0; i < places; ++i) factor *= 10;
    scaled = scaled * (factor / den_);
    const bool negative = scaled < 0;
    if (negative) scaled = -scaled;
    std::string digits;
    do {
      digits.insert(digits.begin(), static_cast<char>('0' + static_cast<int>(scaled % 10)));
      scaled /= 10;
    } while (scaled != 0);
    if (places > 0) {
      while (static_cast<int>(digits.size()) <= places) digits.insert(digits.begin(), '0');
      digits.insert(digits.end() - places, '.');
    }
    return negative ? "-" + digits : digits;
  }

  std::size_t hash() const {
    return std::hash<std::int64_t>{}(num_) * 31u + std::hash<std::int64_t>{}(den_);
  }

 private:
  static constexpr __int128 kLimit = static_cast<__int128>(INT64_MAX);

  static Number reduce(std::int64_t num, std::int64_t den) {
    return reduce128(num, den);
  }

  static Number reduce128(__int128 num, __int128 den) {
    if (den == 0) throw std::domain_error("division by zero");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    __int128 a = num < 0 ? -num : num;
    __int128 b = den;
    while (b != 0) {
      const __int128 t = a % b;
      a = b;
      b = t;
    }
    if (a > 1) {
      num /= a;
      den /= a;
    }
    if (num > kLimit || num < -kLimit || den > kLimit) throw std::overflow_error("arithmetic overflow");
    Number out;
    out.num_ = static_cast<std::int64_t>(num);
    out.den_ = static_cast<std::int64_t>(den);
    return out;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

inline std::ostream& operator<<(std::ostream& os, const Number& n) { return os << n.to_string(); }

}  // namespace disarm
