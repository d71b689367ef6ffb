#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tilerot/quadratic.hpp"
#include "tilerot/rational.hpp"
#include "tilerot/scalar.hpp"

using tilerot::QuadraticNumber;
using tilerot::Rational;

TEST(Rational, ReducesAndOrders) {
  Rational r(6, -8);
  EXPECT_EQ(r.num(), -3);
  EXPECT_EQ(r.den(), 4);
  EXPECT_LT(r, Rational(0));
  EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
  EXPECT_EQ(Rational(-7, 2).floor(), -4);
  EXPECT_EQ(Rational(7, 2).floor(), 3);
}

TEST(Rational, ParsesDecimalsExactly) {
  EXPECT_EQ(Rational::parse("0.05"), Rational(1, 20));
  EXPECT_EQ(Rational::parse("-1.25e-2"), Rational(-1, 80));
  EXPECT_EQ(Rational::parse("3/4"), Rational(3, 4));
  EXPECT_THROW(Rational::parse("1.2.3"), std::invalid_argument);
  EXPECT_THROW(Rational::parse(""), std::invalid_argument);
}

TEST(Rational, OverflowThrows) {
  Rational big(INT64_MAX / 2);
  EXPECT_THROW(big * big, std::overflow_error);
}

TEST(Quadratic, GoldenRatioIdentity) {
  auto phi = QuadraticNumber::golden_ratio();
  EXPECT_EQ(phi * phi, phi + QuadraticNumber(1));
  EXPECT_EQ(QuadraticNumber(1) / phi, phi - QuadraticNumber(1));
  EXPECT_EQ(phi.floor(), 1);
  EXPECT_EQ((-phi).floor(), -2);
}

TEST(Quadratic, ParsesExpressions) {
  auto phi = QuadraticNumber::parse("(1+sqrt5)/2");
  EXPECT_EQ(phi, QuadraticNumber::golden_ratio());
  auto lb = QuadraticNumber::parse("1-phi*1/20");
  EXPECT_NEAR(lb.to_double(), 1 - 1.6180339887498949 / 20, 1e-15);
  EXPECT_EQ(QuadraticNumber::parse("sqrt(12)"), QuadraticNumber::parse("2*sqrt3"));
  EXPECT_EQ(QuadraticNumber::parse("sqrt4"), QuadraticNumber(2));
  EXPECT_THROW(QuadraticNumber::parse("1+"), std::invalid_argument);
  EXPECT_THROW(QuadraticNumber::parse("x"), std::invalid_argument);
}

TEST(Quadratic, MixedFieldsThrow) {
  EXPECT_THROW(QuadraticNumber::sqrt_of(5) + QuadraticNumber::sqrt_of(13), std::domain_error);
}

// Sign and order agree with long double evaluation away from ties.
TEST(QuadraticProperty, OrderMatchesFloat) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coef(-40, 40), den(1, 12);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    QuadraticNumber x(Rational(coef(rng), den(rng)), Rational(coef(rng), den(rng)), 5);
    QuadraticNumber y(Rational(coef(rng), den(rng)), Rational(coef(rng), den(rng)), 5);
    long double dx = x.to_long_double(), dy = y.to_long_double();
    if (std::abs(dx - dy) < 1e-12) continue;
    EXPECT_EQ(x < y, dx < dy);
    EXPECT_EQ(x.floor(), static_cast<std::int64_t>(std::floor(dx)));
    ++checked;
  }
  EXPECT_GE(checked, 100);
}

TEST(QuadraticProperty, FieldAxioms) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coef(-9, 9), den(1, 6);
  auto gen = [&] { return QuadraticNumber(Rational(coef(rng), den(rng)), Rational(coef(rng), den(rng)), 13); };
  for (int i = 0; i < 200; ++i) {
    auto a = gen(), b = gen(), c = gen();
    EXPECT_EQ((a + b) * c, a * c + b * c);
    EXPECT_EQ(a - a, QuadraticNumber(0));
    if (!b.is_zero()) {
      EXPECT_EQ((a / b) * b, a);
    }
  }
}
