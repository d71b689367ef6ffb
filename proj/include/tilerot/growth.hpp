#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "tilerot/form.hpp"

namespace tilerot {

enum class Growth { bounded, linear, unbounded_sublinear, inconclusive };

inline std::string to_string(Growth g) {
  switch (g) {
    case Growth::bounded: return "bounded";
    case Growth::linear: return "linear";
    case Growth::unbounded_sublinear: return "unbounded-sublinear";
    case Growth::inconclusive: return "inconclusive";
  }
  return "?";
}

inline bool is_unbounded(Growth g) { return g == Growth::linear || g == Growth::unbounded_sublinear; }

struct GrowthThresholds {
  double slope = 1e-3;      // per unit length
  double r2 = 0.99;
  double plateau_rel = 0.05;  // bounded: sup(H) - sup(H/10) <= rel*sup(H) + abs
  double plateau_abs = 1e-3;
  double decade_ratio = 1.25;  // unbounded: sup(H) / sup(H/10) >= ratio
};

struct GrowthFit {
  Growth verdict = Growth::inconclusive;
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double sup_final = 0;
  double sup_decade = 0;  // running sup at H/10
  double exponent = 0;    // log10(sup(H)/sup(H/10))
};

/// Classifies a running sup s(L) sampled at increasing lengths L up to
/// `horizon`. Linear: least-squares slope over [H/10, H] above the
/// threshold with R^2 above its threshold. Bounded: the sup barely moves
/// over the last decade. Unbounded-sublinear: it grows by a fixed factor
/// per decade without fitting a line.
inline GrowthFit classify_growth(const std::vector<double>& lengths, const std::vector<double>& sups, double horizon,
                                 const GrowthThresholds& th = {}) {
  GrowthFit fit;
  if (lengths.empty() || lengths.size() != sups.size()) return fit;
  const double lo = horizon / 10;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (lengths[i] > horizon) break;
    if (lengths[i] <= lo) fit.sup_decade = sups[i];
    if (lengths[i] < lo) continue;
    double x = lengths[i], y = sups[i];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    fit.sup_final = y;
    ++n;
  }
  if (n >= 3) {
    double dn = static_cast<double>(n);
    double vx = sxx - sx * sx / dn, vy = syy - sy * sy / dn, cxy = sxy - sx * sy / dn;
    if (vx > 0) {
      fit.slope = cxy / vx;
      fit.intercept = (sy - fit.slope * sx) / dn;
      fit.r2 = vy > 0 ? (cxy * cxy) / (vx * vy) : 1.0;
    }
  }
  if (fit.sup_decade > 0 && fit.sup_final > 0) fit.exponent = std::log10(fit.sup_final / fit.sup_decade);
  if (fit.slope > th.slope && fit.r2 > th.r2) {
    fit.verdict = Growth::linear;
  } else if (fit.sup_final - fit.sup_decade <= th.plateau_rel * fit.sup_final + th.plateau_abs) {
    fit.verdict = Growth::bounded;
  } else if (fit.sup_decade > 0 && fit.sup_final >= th.decade_ratio * fit.sup_decade) {
    fit.verdict = Growth::unbounded_sublinear;
  } else {
    fit.verdict = Growth::inconclusive;
  }
  return fit;
}

struct ProbeTrace {
  std::vector<double> lengths;
  std::vector<double> sups;

  /// At most `points` samples, log-spaced, for reports.
  std::vector<std::pair<double, double>> thinned(std::size_t points = 200) const {
    std::vector<std::pair<double, double>> out;
    if (lengths.empty()) return out;
    double lo = std::max(lengths.front(), 1e-9), hi = lengths.back();
    double next = lo;
    double step = std::pow(hi / lo, 1.0 / static_cast<double>(std::max<std::size_t>(points, 2) - 1));
    for (std::size_t i = 0; i < lengths.size(); ++i) {
      if (lengths[i] + 1e-12 >= next || i + 1 == lengths.size()) {
        out.emplace_back(lengths[i], sups[i]);
        next = std::max(next * step, lengths[i] * step);
      }
    }
    return out;
  }
};

struct AnProbeResult {
  double sup = 0;
  GrowthFit fit;
  ProbeTrace trace;
};

/// Finite-horizon test of asymptotic negligibility: the running sup of
/// |integral of the form from x0 to x| for x0 <= x <= x0 + horizon.
template <Scalar S>
AnProbeResult an_probe(const BoundForm<S>& bf, const S& x0, double horizon, const GrowthThresholds& th = {}) {
  const auto& w = bf.window();
  const double start = to_double(x0);
  if (start + horizon > to_double(bf.hi())) throw OutOfWindow("an_probe horizon runs past the window");
  const double c0 = to_double(bf.cumulative(x0));
  const bool profiles = bf.form().has_profiles();
  AnProbeResult res;
  double sup = 0;
  std::size_t i = w.tile_at(x0);
  auto push = [&](double x, double value) {
    double len = x - start;
    if (len <= 0 || len > horizon) return;
    sup = std::max(sup, std::abs(value - c0));
    res.trace.lengths.push_back(len);
    res.trace.sups.push_back(sup);
  };
  for (; i < bf.last_tile(); ++i) {
    double left = to_double(w.left(i));
    if (left - start > horizon) break;
    if (profiles) {
      const auto& e = bf.form().entry(bf.key(i));
      if (!e.density.empty()) {
        const auto n = e.density.size() - 1;
        double len = to_double(w.tile_length(i));
        double base = to_double(bf.prefix(i));
        for (std::size_t j = 1; j < n; ++j) push(left + len * static_cast<double>(j) / static_cast<double>(n), base + e.cumulative[j]);
      }
    }
    push(to_double(w.right(i)), to_double(bf.prefix(i + 1)));
  }
  res.sup = sup;
  res.fit = classify_growth(res.trace.lengths, res.trace.sups, horizon, th);
  return res;
}

}  // namespace tilerot
