#pragma once

#include <cctype>
#include <cmath>
#include <compare>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "tilerot/rational.hpp"

namespace tilerot {

/// Exact element a + b*sqrt(d) of a real quadratic field Q(sqrt d).
///
/// `d` is a square-free integer > 1, or 0 for plain rationals. A rational
/// value combines freely with any field; mixing two different nonzero `d`
/// throws, since the result would leave every single quadratic field.
class QuadraticNumber {
 public:
  QuadraticNumber() = default;
  QuadraticNumber(std::int64_t n) : a_(n) {}  // NOLINT(implicit)
  QuadraticNumber(Rational a) : a_(a) {}      // NOLINT(implicit)
  QuadraticNumber(Rational a, Rational b, std::int64_t d) : a_(a), b_(b), d_(d) { normalize(); }

  static QuadraticNumber sqrt_of(std::int64_t d);
  static QuadraticNumber golden_ratio() { return {Rational(1, 2), Rational(1, 2), 5}; }

  const Rational& rational_part() const { return a_; }
  const Rational& surd_part() const { return b_; }
  std::int64_t radicand() const { return d_; }
  bool is_rational() const { return b_.is_zero(); }

  long double to_long_double() const {
    return a_.to_long_double() + b_.to_long_double() * std::sqrt(static_cast<long double>(d_));
  }
  double to_double() const { return static_cast<double>(to_long_double()); }

  int sign() const;
  std::int64_t floor() const;

  QuadraticNumber operator-() const { return {-a_, -b_, d_}; }
  friend QuadraticNumber operator+(const QuadraticNumber& x, const QuadraticNumber& y) {
    return {x.a_ + y.a_, x.b_ + y.b_, common_radicand(x, y)};
  }
  friend QuadraticNumber operator-(const QuadraticNumber& x, const QuadraticNumber& y) { return x + (-y); }
  friend QuadraticNumber operator*(const QuadraticNumber& x, const QuadraticNumber& y) {
    std::int64_t d = common_radicand(x, y);
    Rational a = x.a_ * y.a_;
    if (!x.b_.is_zero() && !y.b_.is_zero()) a += x.b_ * y.b_ * Rational(d);
    return {a, x.a_ * y.b_ + x.b_ * y.a_, d};
  }
  friend QuadraticNumber operator/(const QuadraticNumber& x, const QuadraticNumber& y) {
    if (y.is_zero()) throw std::domain_error("QuadraticNumber: division by zero");
    if (y.is_rational()) return {x.a_ / y.a_, x.b_ / y.a_, x.d_};
    // multiply by the conjugate: 1/(a+b√d) = (a-b√d)/(a²-b²d)
    Rational norm = y.a_ * y.a_ - y.b_ * y.b_ * Rational(y.d_);
    QuadraticNumber conj{y.a_ / norm, -y.b_ / norm, y.d_};
    return x * conj;
  }
  QuadraticNumber& operator+=(const QuadraticNumber& o) { return *this = *this + o; }
  QuadraticNumber& operator-=(const QuadraticNumber& o) { return *this = *this - o; }
  QuadraticNumber& operator*=(const QuadraticNumber& o) { return *this = *this * o; }
  QuadraticNumber& operator/=(const QuadraticNumber& o) { return *this = *this / o; }

  bool is_zero() const { return a_.is_zero() && b_.is_zero(); }

  friend bool operator==(const QuadraticNumber& x, const QuadraticNumber& y) {
    return x.a_ == y.a_ && x.b_ == y.b_ && (x.b_.is_zero() || x.d_ == y.d_);
  }
  friend std::strong_ordering operator<=>(const QuadraticNumber& x, const QuadraticNumber& y) {
    int s = (x - y).sign();
    return s < 0 ? std::strong_ordering::less : s > 0 ? std::strong_ordering::greater : std::strong_ordering::equal;
  }

  std::string str() const;
  friend std::ostream& operator<<(std::ostream& os, const QuadraticNumber& q) { return os << q.str(); }

  /// Parses expressions over + - * / ( ) with decimal/fraction literals,
  /// `sqrtN` / `sqrt(N)` and the constant `phi`, e.g. "(1+sqrt5)/2",
  /// "1+0.05", "1-phi*0.05". Throws std::invalid_argument on anything else.
  static QuadraticNumber parse(std::string_view text);

 private:
  static std::int64_t common_radicand(const QuadraticNumber& x, const QuadraticNumber& y) {
    if (x.b_.is_zero()) return y.d_;
    if (y.b_.is_zero()) return x.d_;
    if (x.d_ != y.d_) throw std::domain_error("QuadraticNumber: mixing sqrt" + std::to_string(x.d_) +
                                              " and sqrt" + std::to_string(y.d_));
    return x.d_;
  }
  void normalize() {
    if (b_.is_zero()) d_ = 0;
  }

  Rational a_{};
  Rational b_{};
  std::int64_t d_ = 0;
};

inline QuadraticNumber QuadraticNumber::sqrt_of(std::int64_t d) {
  if (d < 0) throw std::domain_error("sqrt of negative radicand");
  // pull out square factors: sqrt(k^2 m) = k sqrt(m)
  std::int64_t k = 1, m = d;
  for (std::int64_t p = 2; p * p <= m; ++p) {
    while (m % (p * p) == 0) {
      m /= p * p;
      k *= p;
    }
  }
  if (m == 1 || m == 0) return QuadraticNumber(Rational(k * (m == 1 ? 1 : 0)));
  return {Rational(0), Rational(k), m};
}

inline int QuadraticNumber::sign() const {
  int sa = a_.sign(), sb = b_.sign();
  if (sb == 0) return sa;
  if (sa == 0 || sa == sb) return sb != 0 ? sb : sa;
  // signs differ: compare a^2 with b^2 d
  Rational a2 = a_ * a_;
  Rational b2d = b_ * b_ * Rational(d_);
  auto c = a2 <=> b2d;
  if (c == 0) return 0;  // cannot happen for square-free d > 1, kept for safety
  return (c > 0) ? sa : sb;
}

inline std::int64_t QuadraticNumber::floor() const {
  if (b_.is_zero()) return a_.floor();
  auto guess = static_cast<std::int64_t>(std::floor(to_long_double()));
  // fix up rounding: want guess <= x < guess + 1
  while ((*this - QuadraticNumber(guess)).sign() < 0) --guess;
  while ((*this - QuadraticNumber(guess + 1)).sign() >= 0) ++guess;
  return guess;
}

inline std::string QuadraticNumber::str() const {
  if (b_.is_zero()) return a_.str();
  std::string s;
  if (!a_.is_zero()) s = a_.str() + (b_.sign() > 0 ? "+" : "");
  s += b_.str() + "*sqrt" + std::to_string(d_);
  return s;
}

namespace detail {

class QuadraticParser {
 public:
  explicit QuadraticParser(std::string_view t) : text_(t) {}

  QuadraticNumber parse_all() {
    QuadraticNumber v = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw std::invalid_argument("cannot parse length '" + std::string(text_) + "': " + why);
  }
  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  QuadraticNumber expr() {
    QuadraticNumber v = term();
    for (;;) {
      if (eat('+')) v += term();
      else if (eat('-')) v -= term();
      else return v;
    }
  }
  QuadraticNumber term() {
    QuadraticNumber v = unary();
    for (;;) {
      if (eat('*')) v *= unary();
      else if (eat('/')) v /= unary();
      else return v;
    }
  }
  QuadraticNumber unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return primary();
  }
  QuadraticNumber primary() {
    skip_ws();
    if (eat('(')) {
      QuadraticNumber v = expr();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    if (text_.substr(pos_, 4) == "sqrt") {
      pos_ += 4;
      std::int64_t n = 0;
      bool paren = eat('(');
      skip_ws();
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        n = n * 10 + (text_[pos_] - '0');
        ++pos_;
      }
      if (pos_ == start) fail("sqrt needs an integer radicand");
      if (paren && !eat(')')) fail("missing ')' after sqrt");
      return QuadraticNumber::sqrt_of(n);
    }
    if (text_.substr(pos_, 3) == "phi") {
      pos_ += 3;
      return QuadraticNumber::golden_ratio();
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            ((text_[pos_] == 'e' || text_[pos_] == 'E') && pos_ > start) ||
            ((text_[pos_] == '-' || text_[pos_] == '+') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E')))) {
      ++pos_;
    }
    if (pos_ == start) fail("unexpected character");
    return QuadraticNumber(Rational::parse(text_.substr(start, pos_ - start)));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline QuadraticNumber QuadraticNumber::parse(std::string_view text) {
  return detail::QuadraticParser(text).parse_all();
}

}  // namespace tilerot
