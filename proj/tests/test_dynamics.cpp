#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tilerot/catalog.hpp"
#include "tilerot/map.hpp"
#include "tilerot/rotation.hpp"

using namespace tilerot;

namespace {

SpeForm<QuadraticNumber> mu_s(const TilingSystem& sys, const QuadraticNumber& s, const QuadraticNumber& eps) {
  auto phi = QuadraticNumber::golden_ratio();
  return form_from_letter_weights<QuadraticNumber>(
      sys, {QuadraticNumber(1) + s * eps, QuadraticNumber(1) - s * eps * phi}, "mu_s");
}

}  // namespace

TEST(Map, TranslationOrbit) {
  auto fib = catalog::fibonacci();
  auto w = build_window<QuadraticNumber>(fib, 10, Seed::parse("a|a"));
  TranslationMap<QuadraticNumber> f(w, QuadraticNumber(Rational(3, 7)));
  auto t = iterate<QuadraticNumber>(f, QuadraticNumber(0), 50);
  ASSERT_FALSE(t.truncated);
  for (std::size_t n = 0; n <= 50; ++n) EXPECT_EQ(t.positions[n], QuadraticNumber(Rational(3 * static_cast<std::int64_t>(n), 7)));
  auto far = iterate<QuadraticNumber>(f, QuadraticNumber(0), 10000);
  EXPECT_TRUE(far.truncated);
  EXPECT_LT(far.steps(), 10000u);
}

TEST(Map, ConstantVelocityFlow) {
  auto fib = catalog::fibonacci();
  auto w = build_window<double>(fib, 8, Seed::parse("a|a"));
  SpeFlow<double> flow{form_from_letter_weights<double>(fib, {0.5, 0.5}, "dx/2"), "v2"};
  FlowMap<double> f(flow, w);
  for (double x : {0.0, 0.25, 3.7, -5.5}) {
    EXPECT_NEAR(f.apply(x), x + 2, 1e-12);
    std::size_t h = 0;
    EXPECT_NEAR(f.apply_inverse(x + 2, h), x, 1e-12);
  }
}

TEST(Map, HalfTimeOnBTiles) {
  auto fib = catalog::fibonacci();
  auto w = build_window<double>(fib, 6, Seed::parse("a|a"));
  auto flow = flow_from_velocity(fib, collar(fib, 0), [](const Word& k, double) { return k[0] == 1 ? 2.0 : 1.0; }, 4);
  BoundForm<double> mu(flow.slowness, w);
  for (std::size_t i = mu.first_tile(); i < mu.last_tile(); ++i)
    if (w.label(i) == 1) {
      EXPECT_NEAR(mu.integrate(w.left(i), w.right(i)), 0.5, 1e-15);
    }
}

TEST(Map, OrientationViolationRejected) {
  auto fib = catalog::fibonacci();
  auto alpha = collar(fib, 0);
  EXPECT_THROW(displacement_from_function(fib, alpha, [](const Word&, double t) { return 1.0 + 2.0 * std::sin(6.283185307179586 * t); }, 32),
               std::invalid_argument);
  EXPECT_NO_THROW(displacement_from_function(fib, alpha, [](const Word&, double t) { return 1.0 + 0.1 * std::sin(6.283185307179586 * t); }, 32));
  // endpoint values must agree across letters
  EXPECT_THROW(displacement_from_function(fib, alpha, [](const Word& k, double) { return k[0] == 0 ? 1.0 : 0.5; }, 4),
               std::invalid_argument);
}

TEST(Map, FlowSamplingIsMonotone) {
  auto sys = catalog::nue({10, 100, 1000});
  auto w = build_window<double>(sys, 2, Seed::parse("B|A"));
  auto flow = flow_from_velocity(
      sys, collar(sys, 1), [](const Word& k, double t) { return (k[1] == 1 ? 2.0 : 1.0) + 0.3 * std::sin(3.14159 * t); }, 64);
  FlowMap<double> f(flow, w);
  double prev = -1e300;
  for (int i = 0; i < 1000; ++i) {
    double x = -500 + i * 0.9;
    double y = f.apply(x);
    EXPECT_GT(y, prev);
    EXPECT_GT(y, x);
    prev = y;
  }
}

TEST(Rotation, TranslationIsExact) {
  auto fib = catalog::fibonacci();
  auto w = build_window<double>(fib, 16, Seed::parse("a|a"));
  TranslationMap<double> f(w, 0.75);
  auto r = rotation_number_estimate<double>(f, 0.0, 1000);
  EXPECT_DOUBLE_EQ(r.rho, 0.75);
  EXPECT_FALSE(r.truncated);
  TranslationMap<double> zero(w, 0.0);
  auto z = rotation_number_estimate<double>(zero, 0.0, 10);
  EXPECT_TRUE(z.fixed_points);
  EXPECT_EQ(z.rho, 0.0);
}

TEST(Rotation, RhoFromConstantForm) {
  auto fib = catalog::fibonacci();
  auto w = build_window<double>(fib, 14, Seed::parse("a|a"));
  BoundForm<double> mu(form_from_letter_weights<double>(fib, {1 / 1.5, 1 / 1.5}, "dx/1.5"), w);
  auto r = rho_from_form(mu, 0.5, 3.0);
  for (auto [d, ratio] : r.trace) EXPECT_NEAR(ratio, 1.5, 1e-12);
}

TEST(RotationForm, MultipleClasses) {
  auto eps = QuadraticNumber(Rational(1, 20));
  auto sys = catalog::multiclass("1/20");
  auto w = build_window<QuadraticNumber>(sys, 14, Seed::parse("a|a"));
  TranslationMap<QuadraticNumber> g(w, QuadraticNumber(1));
  BoundForm<QuadraticNumber> dx(dx_form<QuadraticNumber>(sys), w);
  auto vd = verify_rotation_form(g, dx, 2000);
  EXPECT_TRUE(vd.passes);
  EXPECT_GE(vd.tested, 1000u);
  for (auto s : {Rational(1, 4), Rational(1, 2), Rational(3, 4)}) {
    BoundForm<QuadraticNumber> mu(mu_s(sys, QuadraticNumber(s), eps), w);
    auto v = verify_rotation_form(g, mu, 2000);
    EXPECT_TRUE(v.passes) << s.str();
    EXPECT_EQ(v.violations, 0u);
  }
  BoundForm<QuadraticNumber> half(dx_form<QuadraticNumber>(sys).scaled(QuadraticNumber(Rational(1, 2))), w);
  auto bad = verify_rotation_form(g, half, 2000);
  EXPECT_FALSE(bad.passes);
  ASSERT_TRUE(bad.counterexample.has_value());
  const auto& c = *bad.counterexample;
  EXPECT_FALSE(c.f_minus < c.x2 && c.x2 < c.f_plus);
}

TEST(RotationForm, FlowFormPasses) {
  auto fib = catalog::fibonacci("phi", "1");
  auto w = build_window<double>(fib, 14, Seed::parse("a|a"));
  auto flow = flow_from_velocity(fib, collar(fib, 1), [](const Word& k, double t) { return 1.0 + 0.4 * (k[0] == 0) * std::sin(t); }, 16);
  FlowMap<double> f(flow, w);
  BoundForm<double> mu(flow.slowness, w);
  auto v = verify_rotation_form(f, mu, 1000);
  EXPECT_TRUE(v.passes);
  EXPECT_GE(v.tested + v.boundary_cases, 900u);
}

TEST(RhoBounded, TranslationHasNoDeviation) {
  auto fib = catalog::fibonacci();
  auto w = build_window<double>(fib, 16, Seed::parse("a|a"));
  TranslationMap<double> g(w, 1.0);
  auto r = rho_bounded_probe<double>(g, 1.0, 1000, {0.0, 0.3, 10.5});
  EXPECT_LT(r.sup, 1e-9);
  EXPECT_EQ(r.fit.verdict, Growth::bounded);
  auto we = build_window<QuadraticNumber>(fib, 16, Seed::parse("a|a"));
  TranslationMap<QuadraticNumber> ge(we, QuadraticNumber(1));
  auto re = rho_bounded_probe<QuadraticNumber>(ge, 1.0, 1000, {QuadraticNumber(0), QuadraticNumber(Rational(3, 10))});
  EXPECT_EQ(re.sup, 0.0);
}
