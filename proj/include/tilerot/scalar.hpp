#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>

#include "tilerot/quadratic.hpp"

namespace tilerot {

/// Default comparison tolerance for float-mode scalars.
inline constexpr double kDefaultTolerance = 1e-9;

enum class ScalarMode { exact, floating };

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static double from_int(std::int64_t n) { return static_cast<double>(n); }
  static double from_quadratic(const QuadraticNumber& q) { return q.to_double(); }
  static double to_double(double x) { return x; }
  static bool equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }
  static std::int64_t floor(double x) { return static_cast<std::int64_t>(std::floor(x)); }
  static std::string str(double x) { return std::to_string(x); }
};

template <>
struct ScalarTraits<QuadraticNumber> {
  static constexpr bool exact = true;
  static QuadraticNumber from_int(std::int64_t n) { return QuadraticNumber(n); }
  static QuadraticNumber from_quadratic(const QuadraticNumber& q) { return q; }
  static double to_double(const QuadraticNumber& x) { return x.to_double(); }
  static bool equal(const QuadraticNumber& a, const QuadraticNumber& b, double) { return a == b; }
  static std::int64_t floor(const QuadraticNumber& x) { return x.floor(); }
  static std::string str(const QuadraticNumber& x) { return x.str(); }
};

template <class S>
concept Scalar = requires { ScalarTraits<S>::exact; };

template <Scalar S>
double to_double(const S& x) {
  return ScalarTraits<S>::to_double(x);
}

}  // namespace tilerot
