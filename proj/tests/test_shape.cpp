#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "tilerot/catalog.hpp"
#include "tilerot/denjoy.hpp"
#include "tilerot/probes.hpp"
#include "tilerot/semiconj.hpp"
#include "tilerot/shape_change.hpp"

using namespace tilerot;

using Q = QuadraticNumber;

TEST(ShapeChange, NonpisotToOneTwo) {
  auto np = catalog::nonpisot();
  auto mu = form_from_letter_weights<Q>(np, {Q(1), Q(2)}, "w12");
  auto sc = shape_change(np, mu);
  ASSERT_TRUE(sc.target.has_value());
  EXPECT_EQ(sc.labels, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(sc.target->exact_lengths[1], Q(2));
  // the target window is the source window with b tiles doubled
  auto w = build_window<Q>(np, 5, np.seed);
  BoundForm<Q> b(mu, w);
  auto moved = transport_window(b);
  auto direct = build_window<Q>(*sc.target, 5, sc.target->seed);
  EXPECT_EQ(moved.labels(), direct.labels());
  EXPECT_EQ(moved.vertices().back() - moved.vertices().front(), direct.vertices().back() - direct.vertices().front());
}

TEST(ShapeChange, RejectsSignChangingForm) {
  auto fib = catalog::fibonacci();
  auto mu = form_from_letter_weights<Q>(fib, {Q(1), Q(-1)}, "bad");
  EXPECT_THROW(shape_change(fib, mu), std::invalid_argument);
}

TEST(ShapeChange, DxTransportIsIdentity) {
  auto fib = catalog::fibonacci("phi", "1");
  auto w = build_window<Q>(fib, 8, fib.seed);
  BoundForm<Q> dx(dx_form<Q>(fib), w);
  auto moved = transport_window(dx);
  for (std::size_t i = 0; i < moved.vertices().size(); ++i)
    EXPECT_EQ(moved.vertices()[i] - moved.vertices()[moved.origin_index()], w.vertices()[i] - w.vertices()[w.origin_index()]);
}

TEST(ShapeChange, CollaredSubstitutionMatchesTransport) {
  auto fib = catalog::fibonacci();
  auto alpha = collar(fib, 1);
  std::vector<Q> weights;
  for (std::size_t k = 0; k < alpha.size(); ++k) weights.push_back(Q(Rational(static_cast<std::int64_t>(k) + 2, 3)));
  auto mu = form_from_weights<Q>(fib, alpha, weights, "collared");
  auto sc = shape_change(fib, mu);
  ASSERT_TRUE(sc.target.has_value());
  auto w = build_window<Q>(fib, 14, fib.seed);
  BoundForm<Q> b(mu, w);
  auto moved = transport_window(b);
  auto direct = build_window<Q>(*sc.target, 14 - sc.seed_level, sc.target->seed);
  // compare the tiles on both sides of the origin
  const std::size_t mo = moved.origin_index(), dor = direct.origin_index();
  const std::size_t span = std::min({mo, dor, moved.tile_count() - mo, direct.tile_count() - dor, std::size_t{40}});
  ASSERT_GE(span, 20u);
  for (std::size_t i = 0; i < 2 * span; ++i) {
    EXPECT_EQ(moved.label(mo - span + i), direct.label(dor - span + i)) << i;
    EXPECT_EQ(moved.vertices()[mo - span + i] - moved.vertices()[mo], direct.vertices()[dor - span + i] - direct.vertices()[dor]);
  }
}

TEST(ShapeChange, FusionCollaredHasNoTarget) {
  auto fsys = catalog::fusion_noclass({3, 4});
  auto alpha = collar(fsys, 1);
  std::vector<double> weights(alpha.size(), 1.0);
  auto sc = shape_change(fsys, form_from_weights<double>(fsys, alpha, weights, "ones"));
  EXPECT_FALSE(sc.target.has_value());
  EXPECT_FALSE(sc.note.empty());
}

// A flow with travel-time form mu becomes translation by 1 after the shape
// change by mu.
TEST(ShapeProperty, FlowBecomesUnitTranslation) {
  auto fib = catalog::fibonacci();
  auto w = build_window<Q>(fib, 14, fib.seed);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> num(1, 30), den(1, 9), frac(0, 99);
  for (int trial = 0; trial < 100; ++trial) {
    auto mu = form_from_letter_weights<Q>(fib, {Q(Rational(num(rng), den(rng))), Q(Rational(num(rng), den(rng)))}, "mu");
    FlowMap<Q> f(SpeFlow<Q>{mu, "flow"}, w);
    BoundForm<Q> b(mu, w);
    auto target = transport_window(b);
    auto g = transport_map<Q>(f, b, target);
    Q lo = target.front() + Q(2), hi = target.back() - Q(2);
    Q y = lo + (hi - lo) * Q(Rational(frac(rng), 100));
    EXPECT_EQ(g.apply(y), y + Q(1));
  }
}

TEST(Psi, TranslationHasZeroPsi) {
  auto fib = catalog::fibonacci();
  auto w = build_window<double>(fib, 14, fib.seed);
  TranslationMap<double> g(w, 1.0);
  auto est = psi_estimate<double>(g, sample_grid(0, 2, 0.01), 500, 1.0);
  for (const auto& s : est.samples) EXPECT_LT(std::abs(s.psi), 1e-9);
  EXPECT_TRUE(collapsing_intervals(est, 0.1).empty());
}

TEST(PsiProperty, MonotoneInHorizonAndPoint) {
  auto fib = catalog::fibonacci("phi", "1");
  auto w = build_window<double>(fib, 16, fib.seed);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> amp(-0.45, 0.45);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = amp(rng), b = amp(rng);
    auto flow = flow_from_velocity(fib, collar(fib, 0),
                                   [&](const Word& k, double t) { return 1.0 + (k[0] == 0 ? a : b) * std::sin(t); }, 16);
    FlowMap<double> f(flow, w);
    auto est = psi_estimate<double>(f, sample_grid(0, 3, 0.25), 200, 1.0);
    for (const auto& s : est.samples)
      for (std::size_t i = 1; i < s.psi_at.size(); ++i) EXPECT_LE(s.psi_at[i - 1], s.psi_at[i]);
    for (std::size_t i = 1; i < est.samples.size(); ++i) EXPECT_LE(est.samples[i - 1].j, est.samples[i].j + 1e-9);
  }
}

TEST(Denjoy, SemiConjugacyAndRotation) {
  const double alpha = (std::sqrt(5.0) - 1) / 2;
  DenjoySystem d(alpha);
  double worst = 0;
  for (double x : sample_grid(0, 1, 1e-3)) worst = std::max(worst, d.semiconjugacy_residual(x));
  EXPECT_LT(worst, 1e-12);
  double x = 0.1;
  const int n = 100000;
  for (int i = 0; i < n; ++i) x = d.lift(x);
  EXPECT_LT(std::abs((x - 0.1) / n - alpha), 1e-4);
  // the inserted intervals map onto each other
  for (int k = -5; k < 5; ++k) {
    auto i = d.inserted(k), j = d.inserted(k + 1);
    EXPECT_NEAR(d.circle_map(i.lo), j.lo, 1e-12);
    EXPECT_NEAR(d.circle_map(i.hi), j.hi, 1e-12);
  }
}

TEST(Denjoy, NoShortPeriodicPoints) {
  DenjoySystem d((std::sqrt(5.0) - 1) / 2);
  auto r = periodic_point_check(d, 8, 500);
  EXPECT_TRUE(r.none());
}

TEST(Denjoy, PsiFindsWideIntervals) {
  const double alpha = (std::sqrt(5.0) - 1) / 2;
  DenjoySystem d(alpha);
  auto fib = catalog::fibonacci();
  auto w = build_window<double>(fib, 18, fib.seed);
  auto f = denjoy_map(d, w);
  const double h = 1e-3;
  auto est = psi_estimate<double>(f, sample_grid(0, 1, h), 1000, alpha);
  auto found = collapsing_intervals(est, 0.1);
  for (int k : {0, 1, -1}) {
    auto in = d.inserted(k);
    bool hit = false;
    for (const auto& c : found) hit = hit || (c.lo >= in.lo - h && c.hi <= in.hi + h && c.length() >= in.length() - 2 * h);
    EXPECT_TRUE(hit) << k;
  }
}

TEST(Probes, CoboundaryVerdicts) {
  auto fib = catalog::fibonacci();
  auto w = build_window<Q>(fib, 12, fib.seed);
  auto mu = form_from_letter_weights<Q>(fib, {Q(2), Q(1)}, "mu");
  std::map<Word, Q> values;
  int v = 0;
  for (const auto& ctx : SpeFunction<Q>::contexts(fib, 1)) values[ctx] = Q(Rational(v++, 5));
  SpeFunction<Q> g(1, values);
  auto shifted = linear_combination<Q>(fib, {{Q(1), mu}, {Q(1), g.differential(fib)}}, "mu+dg");
  auto c1 = cohomology_coordinates(fib, mu, 1), c2 = cohomology_coordinates(fib, shifted, 1);
  auto same = coboundary_probe(c1, c2, w);
  EXPECT_EQ(same.verdict, CoboundaryVerdict::cohomologous_consistent);
  EXPECT_GT(same.tested, 0u);
  auto other = cohomology_coordinates(fib, indicator_form<Q>(fib, "a"), 1);
  auto diff = coboundary_probe(c1, other, w);
  ASSERT_EQ(diff.verdict, CoboundaryVerdict::distinct);
  EXPECT_NE(diff.certificate->integral1, diff.certificate->integral2);
}

TEST(Probes, RationalityOfTranslations) {
  auto golden = catalog::fibonacci("phi", "1");
  auto w = build_window<Q>(golden, 14, golden.seed);
  TranslationMap<Q> g(w, Q(1));
  auto r = rationality_probe<Q>(g, Q(3), 500, 300);
  EXPECT_TRUE(r.never_integer);
  EXPECT_EQ(r.verdict, "irrational (probe)");
  auto unit = catalog::fibonacci();
  auto wu = build_window<Q>(unit, 12, unit.seed);
  TranslationMap<Q> h(wu, Q(Rational(1, 2)));
  auto ru = rationality_probe<Q>(h, Q(3), 500, 300);
  EXPECT_FALSE(ru.never_integer);
  EXPECT_EQ(ru.verdict, "rational (probe)");
}

TEST(Probes, GoodFlowAgreesOnFibonacci) {
  auto fib = catalog::fibonacci();
  auto w = build_window<double>(fib, 22, fib.seed);
  const double phi = (1 + std::sqrt(5.0)) / 2;
  SpeFlow<double> flow{form_from_letter_weights<double>(fib, {1.2, 1 - 0.2 * phi}, "mu"), "fib"};
  auto r = goodflow_check(fib, flow, 1.0, w, 5000, 5000, {0.0, 0.5, 1.5});
  EXPECT_EQ(r.an.fit.verdict, Growth::bounded) << r.summary;
  EXPECT_EQ(r.bounded.fit.verdict, Growth::bounded) << r.summary;
  EXPECT_TRUE(r.agree);
}
