#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/map.hpp"

namespace tilerot {

struct PsiSample {
  double x = 0;
  double psi = 0;               // max over 1 <= n <= N of f^n(x) - x - n rho
  double j = 0;                 // x + psi
  double tail_increment = 0;    // psi_N - psi_{0.9 N}
  std::vector<double> psi_at;   // psi at each checkpoint
  std::size_t steps = 0;        // iterations actually made
  bool truncated = false;
};

struct SemiConjugacyEstimate {
  std::size_t horizon = 0;
  double rho = 1;
  std::vector<std::size_t> checkpoints;  // N/10, 2N/10, ..., N
  std::vector<PsiSample> samples;
  double max_tail_increment = 0;
  std::size_t truncated = 0;
};

/// Truncated limsup psi_N(x) = max_{1<=n<=N} (f^n(x) - x - n rho) on each
/// sample, with its values at ten checkpoints in N.
template <Scalar S>
SemiConjugacyEstimate psi_estimate(const SpeMap<S>& map, const std::vector<S>& xs, std::size_t horizon, double rho = 1.0) {
  if (horizon == 0) throw std::invalid_argument("psi_estimate needs N >= 1");
  if (!map.fixed_point_free()) throw std::invalid_argument("psi_estimate needs a fixed-point-free map");
  SemiConjugacyEstimate est;
  est.horizon = horizon;
  est.rho = rho;
  for (int k = 1; k <= 10; ++k) est.checkpoints.push_back(std::max<std::size_t>(1, horizon * static_cast<std::size_t>(k) / 10));
  const std::size_t tail_from = std::max<std::size_t>(1, horizon * 9 / 10);
  for (const auto& x0 : xs) {
    PsiSample s;
    s.x = to_double(x0);
    double best = -std::numeric_limits<double>::infinity(), at_tail = best;
    std::size_t hint = 0, next_cp = 0;
    S x = x0;
    try {
      for (std::size_t n = 1; n <= horizon; ++n) {
        x = map.apply(x, hint);
        best = std::max(best, to_double(x - x0) - static_cast<double>(n) * rho);
        s.steps = n;
        if (n == tail_from) at_tail = best;
        while (next_cp < est.checkpoints.size() && est.checkpoints[next_cp] == n) {
          s.psi_at.push_back(best);
          ++next_cp;
        }
      }
    } catch (const OutOfWindow&) {
      s.truncated = true;
      ++est.truncated;
    }
    s.psi = best;
    s.j = s.x + best;
    s.tail_increment = s.truncated || s.steps < tail_from ? 0.0 : best - at_tail;
    est.max_tail_increment = std::max(est.max_tail_increment, s.tail_increment);
    est.samples.push_back(std::move(s));
  }
  return est;
}

struct Interval {
  double lo = 0, hi = 0;
  double length() const { return hi - lo; }
};

/// Maximal runs of consecutive samples over which the finite-difference
/// slope of psi is within slope_tol of -1 (j nearly constant). Samples must
/// be ascending in x.
inline std::vector<Interval> collapsing_intervals(const SemiConjugacyEstimate& est, double slope_tol) {
  const auto& s = est.samples;
  for (std::size_t i = 0; i + 1 < s.size(); ++i)
    if (!(s[i].x < s[i + 1].x)) throw std::invalid_argument("collapsing_intervals needs ascending samples");
  std::vector<Interval> out;
  bool open = false;
  Interval cur;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    bool flat = !s[i].truncated && !s[i + 1].truncated &&
                std::abs((s[i + 1].psi - s[i].psi) / (s[i + 1].x - s[i].x) + 1.0) <= slope_tol;
    if (flat) {
      if (!open) cur.lo = s[i].x;
      cur.hi = s[i + 1].x;
      open = true;
    } else if (open) {
      out.push_back(cur);
      open = false;
    }
  }
  if (open) out.push_back(cur);
  return out;
}

/// Evenly spaced samples on [lo, hi) with spacing h.
inline std::vector<double> sample_grid(double lo, double hi, double h) {
  std::vector<double> xs;
  auto n = static_cast<std::size_t>(std::floor((hi - lo) / h));
  xs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) xs.push_back(lo + static_cast<double>(i) * h);
  return xs;
}

}  // namespace tilerot
