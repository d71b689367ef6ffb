#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/form.hpp"
#include "tilerot/growth.hpp"
#include "tilerot/map.hpp"
#include "tilerot/rotation.hpp"

namespace tilerot {

// ---------------------------------------------------------------------------
// Cohomology coordinates

/// Weights of a form on the collared tiles of one depth.
template <Scalar S>
struct CohomologyCoordinates {
  int depth = 0;
  std::vector<S> weights;  // indexed like collar(sys, depth)
  SpeForm<S> form;         // the form lifted to that depth
};

template <Scalar S>
CohomologyCoordinates<S> cohomology_coordinates(const TilingSystem& sys, const SpeForm<S>& form, int depth) {
  CohomologyCoordinates<S> c;
  c.depth = depth;
  c.form = form.lifted(collar(sys, depth));
  for (std::size_t k = 0; k < c.form.alphabet().size(); ++k) c.weights.push_back(c.form.weight(static_cast<int>(k)));
  return c;
}

enum class CoboundaryVerdict { cohomologous_consistent, distinct, inconclusive };

inline std::string to_string(CoboundaryVerdict v) {
  switch (v) {
    case CoboundaryVerdict::cohomologous_consistent: return "cohomologous-consistent";
    case CoboundaryVerdict::distinct: return "distinct";
    case CoboundaryVerdict::inconclusive: return "inconclusive";
  }
  return "?";
}

template <Scalar S>
struct CoboundaryCertificate {
  S x1{}, x2{};
  S integral1{}, integral2{};
};

template <Scalar S>
struct CoboundaryProbe {
  CoboundaryVerdict verdict = CoboundaryVerdict::inconclusive;
  std::size_t tested = 0;
  std::optional<CoboundaryCertificate<S>> certificate;
};

/// Semi-decision: forms that differ by dg integrate equally between points
/// with matching patches. A pair where the integrals differ proves the
/// classes distinct; agreement on every tested pair is only consistency.
template <Scalar S>
CoboundaryProbe<S> coboundary_probe(const CohomologyCoordinates<S>& c1, const CohomologyCoordinates<S>& c2,
                                    const TilingWindow<S>& w, std::size_t pair_budget = 2000) {
  if (c1.depth != c2.depth) throw std::invalid_argument("coboundary_probe: coordinates at different collar depths");
  BoundForm<S> m1(c1.form, w), m2(c2.form, w);
  double r = std::max(c1.form.radius(), c2.form.radius());
  S radius = ScalarTraits<S>::from_quadratic(QuadraticNumber(Rational(static_cast<std::int64_t>(std::ceil(r * 1000)), 1000)));
  CoboundaryProbe<S> p;
  for (const auto& [x1, x2] : matched_pairs(w, radius, pair_budget, m1.lo(), m1.hi())) {
    S a = m1.integrate(x1, x2), b = m2.integrate(x1, x2);
    ++p.tested;
    bool same;
    if constexpr (ScalarTraits<S>::exact) {
      same = a == b;
    } else {
      same = std::abs(a - b) <= w.tolerance() * std::max(1.0, std::abs(a));
    }
    if (!same && !p.certificate) p.certificate = CoboundaryCertificate<S>{x1, x2, a, b};
  }
  if (p.certificate) {
    p.verdict = CoboundaryVerdict::distinct;
  } else if (p.tested > 0) {
    p.verdict = CoboundaryVerdict::cohomologous_consistent;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Rationality

struct RationalityProbe {
  // matched-patch return displacements x2 - x1 against the tile count between them
  std::size_t pairs = 0;
  bool never_integer = true;   // decided exactly in exact mode
  double max_offset = 0;       // max |(x2 - x1) - tiles between|
  double min_offset = 0;
  // orbit of the origin: distance of f^n(0) to the nearest vertex, binned
  std::size_t orbit_points = 0;
  std::vector<std::pair<int, double>> coverage;  // (k, fraction of 2^-k bins hit)
  std::string verdict;                           // always labelled "probe"
};

/// Evidence for or against minimality of the map on the tiling's orbit
/// closure: return displacements that are never integers but always near
/// them point to a rational class; orbit offsets filling [0, L/2] point to an
/// irrational one.
template <Scalar S>
RationalityProbe rationality_probe(const SpeMap<S>& map, const S& radius, std::size_t pair_budget, std::size_t orbit_length,
                                   int max_k = 12) {
  const auto& w = map.window();
  RationalityProbe p;
  p.min_offset = std::numeric_limits<double>::infinity();
  for (const auto& [x1, x2] : matched_pairs(w, radius, pair_budget, w.front(), w.back())) {
    S d = x2 - x1;
    ++p.pairs;
    std::int64_t fl = ScalarTraits<S>::floor(d);
    if (ScalarTraits<S>::from_int(fl) == d) p.never_integer = false;
    auto tiles = static_cast<double>(w.tile_near(x2, 0) - w.tile_at(x1));
    double off = std::abs(to_double(d) - tiles);
    p.max_offset = std::max(p.max_offset, off);
    p.min_offset = std::min(p.min_offset, off);
  }
  if (p.pairs == 0) p.min_offset = 0;
  double half = 0;
  for (std::size_t i = 0; i < w.tile_count(); ++i) half = std::max(half, to_double(w.tile_length(i)) / 2);
  auto orbit = iterate(map, w.vertices()[w.origin_index()], orbit_length);
  std::vector<double> offsets;
  std::size_t hint = 0;
  for (const auto& x : orbit.positions) {
    std::size_t i = w.tile_near(x, hint);
    hint = i;
    offsets.push_back(std::min(to_double(x - w.left(i)), to_double(w.right(i) - x)));
  }
  p.orbit_points = offsets.size();
  for (int k = 1; k <= max_k; ++k) {
    double h = std::ldexp(1.0, -k);
    auto bins = static_cast<std::size_t>(std::ceil(half / h));
    std::set<std::size_t> hit;
    for (double o : offsets) hit.insert(std::min(bins - 1, static_cast<std::size_t>(o / h)));
    p.coverage.emplace_back(k, static_cast<double>(hit.size()) / static_cast<double>(bins));
  }
  double c6 = p.coverage.size() >= 6 ? p.coverage[5].second : p.coverage.back().second;
  if (c6 >= 0.99) {
    p.verdict = "irrational (probe)";
  } else if (c6 < 0.9) {
    p.verdict = "rational (probe)";
  } else {
    p.verdict = "inconclusive (probe)";
  }
  return p;
}

// ---------------------------------------------------------------------------
// Flow conditions

struct GoodFlowReport {
  double rho = 0;
  AnProbeResult an;         // mu - dx / rho
  RhoBoundedResult bounded; // time-1 map
  bool agree = false;       // both bounded or both unbounded
  std::string summary;
};

/// Runs both finite-horizon probes of the flow conditions: mu - dx/rho
/// asymptotically negligible, and the time-1 map rho-bounded.
inline GoodFlowReport goodflow_check(const TilingSystem& sys, const SpeFlow<double>& flow, double rho,
                                     const TilingWindow<double>& w, double an_horizon, std::size_t map_horizon,
                                     const std::vector<double>& samples, const GrowthThresholds& th = {}) {
  GoodFlowReport r;
  r.rho = rho;
  auto beta = linear_combination<double>(sys, {{1.0, flow.slowness}, {-1.0 / rho, dx_form<double>(sys)}}, "mu-dx/rho");
  BoundForm<double> b(beta, w);
  r.an = an_probe(b, samples.front(), an_horizon, th);
  FlowMap<double> f(flow, w);
  r.bounded = rho_bounded_probe<double>(f, rho, map_horizon, samples, th);
  auto settled = [](Growth g) { return g != Growth::inconclusive; };
  r.agree = settled(r.an.fit.verdict) && settled(r.bounded.fit.verdict) &&
            is_unbounded(r.an.fit.verdict) == is_unbounded(r.bounded.fit.verdict);
  r.summary = "an_probe: " + to_string(r.an.fit.verdict) + ", rho_bounded_probe: " + to_string(r.bounded.fit.verdict);
  return r;
}

}  // namespace tilerot
