#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tilerot/form.hpp"
#include "tilerot/growth.hpp"
#include "tilerot/map.hpp"

namespace tilerot {

// ---------------------------------------------------------------------------
// Rotation numbers

struct RotationEstimate {
  double rho = 0;
  std::size_t steps = 0;  // iterations actually used
  double cauchy_width = 0;  // spread of estimates over n in [N/10, N]
  bool truncated = false;
  bool fixed_points = false;
  std::string note;
  std::vector<std::pair<double, double>> trace;  // (n, estimate), log-thinned
};

/// rho_N = (f^N(x0) - x0) / N, or the backward analogue (f^{-N}(x0) - x0)/(-N).
template <Scalar S>
RotationEstimate rotation_number_estimate(const SpeMap<S>& map, const S& x0, std::size_t n, bool backward = false) {
  RotationEstimate r;
  if (!map.fixed_point_free()) {
    r.fixed_points = true;
    r.note = "displacement has zeros; they recur with bounded gaps, so the rotation number is 0";
    return r;
  }
  auto orbit = iterate(map, x0, n, backward);
  r.truncated = orbit.truncated;
  if (orbit.truncated) r.note = orbit.reason;
  r.steps = orbit.steps();
  if (r.steps == 0) return r;
  const double start = to_double(x0);
  const double sign = backward ? -1.0 : 1.0;
  auto est = [&](std::size_t k) { return (to_double(orbit.positions[k]) - start) / (sign * static_cast<double>(k)); };
  r.rho = est(r.steps);
  double lo = r.rho, hi = r.rho;
  for (std::size_t k = std::max<std::size_t>(1, r.steps / 10); k <= r.steps; ++k) {
    double e = est(k);
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  r.cauchy_width = hi - lo;
  double next = 1;
  for (std::size_t k = 1; k <= r.steps; ++k) {
    if (static_cast<double>(k) >= next || k == r.steps) {
      r.trace.emplace_back(static_cast<double>(k), est(k));
      next *= 1.1;
    }
  }
  return r;
}

struct RhoFromFormResult {
  double rho = 0;
  std::size_t returns = 0;
  double spread = 0;  // over the farthest tenth of the return points
  std::vector<std::pair<double, double>> trace;  // (x_n - x0, ratio)
};

/// rho from return points x_n of x0: (x_n - x0) / int_{x0}^{x_n} mu, read at the
/// farthest return point on the chosen side.
template <Scalar S>
RhoFromFormResult rho_from_form(const BoundForm<S>& mu, const S& x0, const S& radius, bool forward = true) {
  if (!mu.form().positive()) throw std::invalid_argument("rho_from_form needs a positive form");
  auto pts = return_points(mu.window(), x0, radius);
  std::vector<S> side;
  for (const auto& x : pts)
    if (forward ? x0 < x : x < x0) side.push_back(x);
  if (!forward) std::reverse(side.begin(), side.end());
  if (side.size() < 2) throw std::runtime_error("too few return points in the window for rho_from_form");
  RhoFromFormResult r;
  r.returns = side.size();
  const S c0 = mu.cumulative(x0);
  std::vector<double> ratios;
  for (const auto& x : side) {
    double d = to_double(x - x0);
    double ratio = d / to_double(mu.cumulative(x) - c0);
    ratios.push_back(ratio);
    r.trace.emplace_back(std::abs(d), ratio);
  }
  r.rho = ratios.back();
  auto tail = ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() - std::max<std::size_t>(1, ratios.size() / 10));
  auto [mn, mx] = std::minmax_element(tail, ratios.end());
  r.spread = *mx - *mn;
  return r;
}

// ---------------------------------------------------------------------------
// Matched pairs

/// Points whose radius-R patches agree, paired up nearest-first. Anchors are
/// tile vertices and tile midpoints in [from, to].
template <Scalar S>
std::vector<std::pair<S, S>> matched_pairs(const TilingWindow<S>& w, const S& radius, std::size_t budget, const S& from,
                                           const S& to) {
  // group anchors by patch
  std::map<std::pair<int, Word>, std::vector<std::size_t>> groups;
  std::vector<S> anchors;
  std::vector<Patch<S>> patches;
  const S half = ScalarTraits<S>::from_quadratic(QuadraticNumber(Rational(1, 2)));
  for (std::size_t i = 0; i < w.tile_count(); ++i) {
    for (int kind = 0; kind < 2; ++kind) {
      S x = kind == 0 ? w.left(i) : w.left(i) + w.tile_length(i) * half;
      if (x < from || to < x || !w.in_safe_interior(x, radius)) continue;
      auto p = patch_at(w, x, radius);
      auto& g = groups[{kind, p.labels}];
      if (!g.empty() && !match_patches(patches[g.front()], p, w.tolerance())) continue;
      g.push_back(anchors.size());
      anchors.push_back(x);
      patches.push_back(std::move(p));
    }
  }
  // k-way merge of (i, i+gap) candidates by distance
  using Cand = std::tuple<double, const std::vector<std::size_t>*, std::size_t, std::size_t>;
  auto cmp = [](const Cand& a, const Cand& b) { return std::get<0>(a) > std::get<0>(b); };
  std::priority_queue<Cand, std::vector<Cand>, decltype(cmp)> heap(cmp);
  auto dist = [&](std::size_t a, std::size_t b) { return to_double(anchors[b] - anchors[a]); };
  for (const auto& [key, g] : groups)
    for (std::size_t i = 0; i + 1 < g.size(); ++i) heap.emplace(dist(g[i], g[i + 1]), &g, i, i + 1);
  std::vector<std::pair<S, S>> out;
  while (!heap.empty() && out.size() < budget) {
    auto [d, g, i, j] = heap.top();
    heap.pop();
    out.emplace_back(anchors[(*g)[i]], anchors[(*g)[j]]);
    if (j + 1 < g->size()) heap.emplace(dist((*g)[i], (*g)[j + 1]), g, i, j + 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rotation-form verification

template <Scalar S>
struct RotationFormCounterexample {
  S x1{}, x2{};
  S integral{};
  std::int64_t n_minus = 0, n_plus = 0;
  S f_minus{}, f_plus{};
};

template <Scalar S>
struct RotationFormVerdict {
  bool passes = false;
  std::size_t tested = 0;
  std::size_t violations = 0;
  std::size_t boundary_cases = 0;  // float mode, integral within tau of an integer
  std::size_t skipped = 0;         // orbit left the window
  std::optional<RotationFormCounterexample<S>> counterexample;
  std::size_t decided() const { return tested - boundary_cases; }
  std::string verdict() const {
    if (passes) return "passes on sample";
    return violations > 0 ? "fails" : "inconclusive";
  }
};

/// Checks, on matched pairs x1 < x2, that x2 lies strictly between
/// f^{n-}(x1) and f^{n+}(x1) for n- < int_{x1}^{x2} mu < n+ the nearest
/// integers (for an integral exactly n: n-1 and n+1).
template <Scalar S>
RotationFormVerdict<S> verify_rotation_form(const SpeMap<S>& map, const BoundForm<S>& mu,
                                            const std::vector<std::pair<S, S>>& pairs) {
  RotationFormVerdict<S> v;
  const double tau = map.window().tolerance();
  for (const auto& [a, b] : pairs) {
    const S x1 = a < b ? a : b, x2 = a < b ? b : a;
    S integral;
    try {
      integral = mu.integrate(x1, x2);
    } catch (const OutOfWindow&) {
      ++v.skipped;
      continue;
    }
    std::int64_t fl = ScalarTraits<S>::floor(integral);
    bool is_int = ScalarTraits<S>::from_int(fl) == integral;
    std::int64_t n_minus = is_int ? fl - 1 : fl;
    std::int64_t n_plus = fl + 1;
    bool boundary = false;
    if constexpr (!ScalarTraits<S>::exact) {
      double near = std::round(integral);
      if (std::abs(integral - near) <= tau) {
        boundary = true;
        n_minus = static_cast<std::int64_t>(near) - 1;
        n_plus = static_cast<std::int64_t>(near) + 1;
      }
    }
    // f^k(x1) for k up to n_plus
    std::optional<S> f_minus, f_plus;
    bool ok = true;
    try {
      std::size_t hint = 0;
      S x = x1;
      if (n_minus <= 0) f_minus = x1;  // f^k(x1) <= x1 < x2 for k <= 0
      for (std::int64_t k = 1; k <= n_plus; ++k) {
        x = map.apply(x, hint);
        if (k == n_minus) f_minus = x;
        if (k == n_plus) f_plus = x;
      }
      if (n_plus <= 0) f_plus = x1;
    } catch (const OutOfWindow&) {
      ok = false;
    }
    if (!ok) {
      ++v.skipped;
      continue;
    }
    ++v.tested;
    bool lower = n_minus <= 0 ? !(x2 < x1) : *f_minus < x2;
    bool upper = n_plus > 0 && x2 < *f_plus;
    if (boundary) {
      ++v.boundary_cases;
      continue;
    }
    if (!(lower && upper)) {
      ++v.violations;
      if (!v.counterexample) v.counterexample = RotationFormCounterexample<S>{x1, x2, integral, n_minus, n_plus, *f_minus, *f_plus};
    }
  }
  v.passes = v.violations == 0 && v.decided() > 0;
  return v;
}

/// Pairs drawn at radius max(R_form, R_map) from the middle of the window.
template <Scalar S>
RotationFormVerdict<S> verify_rotation_form(const SpeMap<S>& map, const BoundForm<S>& mu, std::size_t pair_budget) {
  const auto& w = map.window();
  double r = std::max(mu.form().radius(), map.radius());
  // round up to a rational so exact windows get an exact radius
  S radius = ScalarTraits<S>::from_quadratic(QuadraticNumber(Rational(static_cast<std::int64_t>(std::ceil(r * 1000)), 1000)));
  return verify_rotation_form(map, mu, matched_pairs(w, radius, pair_budget, mu.lo(), mu.hi()));
}

// ---------------------------------------------------------------------------
// rho-boundedness

struct RhoBoundedResult {
  double sup = 0;
  GrowthFit fit;
  ProbeTrace trace;  // lengths = n
  std::size_t truncated_samples = 0;
};

/// sup over samples x and n <= N of |f^n(x) - x - n rho|, with the running sup
/// in n classified like an_probe.
template <Scalar S>
RhoBoundedResult rho_bounded_probe(const SpeMap<S>& map, double rho, std::size_t n, const std::vector<S>& samples,
                                   const GrowthThresholds& th = {}) {
  if (!map.fixed_point_free()) throw std::invalid_argument("rho_bounded_probe needs a fixed-point-free map");
  std::vector<double> dev(n + 1, 0.0);
  RhoBoundedResult r;
  std::size_t shortest = n;
  for (const auto& x0 : samples) {
    std::size_t hint = 0;
    S x = x0;
    std::size_t k = 1;
    try {
      for (; k <= n; ++k) {
        x = map.apply(x, hint);
        dev[k] = std::max(dev[k], std::abs(to_double(x - x0) - static_cast<double>(k) * rho));
      }
    } catch (const OutOfWindow&) {
      ++r.truncated_samples;
      shortest = std::min(shortest, k - 1);
    }
  }
  double sup = 0;
  for (std::size_t k = 1; k <= shortest; ++k) {
    sup = std::max(sup, dev[k]);
    r.trace.lengths.push_back(static_cast<double>(k));
    r.trace.sups.push_back(sup);
  }
  r.sup = sup;
  r.fit = classify_growth(r.trace.lengths, r.trace.sups, static_cast<double>(shortest), th);
  return r;
}

}  // namespace tilerot
