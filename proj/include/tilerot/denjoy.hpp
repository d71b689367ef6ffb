#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/map.hpp"
#include "tilerot/semiconj.hpp"

namespace tilerot {

struct DenjoySchedule {
  double scale = 0.25;  // |I_n| = scale * ratio^{|n|}
  double ratio = 0.5;
  int cutoff = 60;      // intervals with |n| > cutoff are below double resolution and left out
};

/// Denjoy blow-up of rotation by alpha: the orbit point theta_n = n alpha
/// (mod 1) is replaced by an interval I_n, and the circle is rescaled to
/// length 1. f maps I_n linearly onto I_{n+1} and acts as the rotation off
/// the inserted intervals. Coordinates x in [0, 1) are on the blown-up
/// circle; theta in [0, 1) on the original one.
class DenjoySystem {
 public:
  DenjoySystem(double alpha, DenjoySchedule schedule = {}) : alpha_(alpha), sched_(schedule) {
    if (!(alpha > 0 && alpha < 1)) throw std::invalid_argument("denjoy: alpha must lie in (0, 1)");
    if (!(schedule.scale > 0) || !(schedule.ratio > 0 && schedule.ratio < 1) || schedule.cutoff < 1)
      throw std::invalid_argument("denjoy: schedule must be positive and summable");
    const int k = sched_.cutoff;
    for (int n = -k; n <= k; ++n) {
      double theta = std::fmod(static_cast<double>(n) * alpha, 1.0);
      if (theta < 0) theta += 1.0;
      gaps_.push_back({n, theta, sched_.scale * std::pow(sched_.ratio, std::abs(n)), 0.0});
    }
    std::sort(gaps_.begin(), gaps_.end(), [](const Gap& a, const Gap& b) { return a.theta < b.theta; });
    for (std::size_t i = 0; i + 1 < gaps_.size(); ++i)
      if (!(gaps_[i].theta < gaps_[i + 1].theta)) throw std::invalid_argument("denjoy: inserted intervals overlap");
    double before = 0;
    for (auto& g : gaps_) {
      g.start = g.theta + before;
      before += g.length;
    }
    total_ = 1.0 + before;
    by_index_.assign(gaps_.size(), 0);
    for (std::size_t i = 0; i < gaps_.size(); ++i) by_index_[static_cast<std::size_t>(gaps_[i].n + k)] = i;
  }

  double alpha() const { return alpha_; }
  const DenjoySchedule& schedule() const { return sched_; }
  /// Length of the blown-up circle before rescaling.
  double unscaled_length() const { return total_; }

  /// I_n in blown-up coordinates [0, 1).
  Interval inserted(int n) const {
    const auto& g = gap(n);
    return {g.start / total_, (g.start + g.length) / total_};
  }
  std::vector<int> indices() const {
    std::vector<int> out;
    for (int n = -sched_.cutoff; n <= sched_.cutoff; ++n) out.push_back(n);
    return out;
  }

  /// pi: blown-up circle -> circle, collapsing each I_n to theta_n.
  double project(double x) const {
    double s = wrap(x) * total_;
    auto i = locate(s);
    if (i < 0) return s;
    const auto& g = gaps_[static_cast<std::size_t>(i)];
    if (s <= g.start + g.length) return g.theta;
    return s - (g.start + g.length - g.theta);
  }

  /// The circle map f on [0, 1).
  double circle_map(double x) const {
    double s = wrap(x) * total_;
    auto i = locate(s);
    if (i >= 0) {
      const auto& g = gaps_[static_cast<std::size_t>(i)];
      if (s <= g.start + g.length) {
        if (g.n == sched_.cutoff) return position(next_theta(g.theta)) / total_;
        const auto& h = gap(g.n + 1);
        return (h.start + (s - g.start) * h.length / g.length) / total_;
      }
    }
    return position(next_theta(project_unscaled(s, i))) / total_;
  }

  double circle_map_inverse(double x) const {
    double s = wrap(x) * total_;
    auto i = locate(s);
    if (i >= 0) {
      const auto& g = gaps_[static_cast<std::size_t>(i)];
      if (s <= g.start + g.length) {
        if (g.n == -sched_.cutoff) return position(prev_theta(g.theta)) / total_;
        const auto& h = gap(g.n - 1);
        return (h.start + (s - g.start) * h.length / g.length) / total_;
      }
    }
    return position(prev_theta(project_unscaled(s, i))) / total_;
  }

  /// Lift F_0 with x < F_0(x) < x + 1 and F_0(x + 1) = F_0(x) + 1.
  double lift(double x) const {
    double m = std::floor(x);
    double u = x - m;
    double d = circle_map(u) - u;
    if (d <= 0) d += 1.0;
    return x + d;
  }
  double lift_inverse(double x) const {
    double m = std::floor(x);
    double u = x - m;
    double d = u - circle_map_inverse(u);
    if (d <= 0) d += 1.0;
    return x - d;
  }

  /// |pi(f(x)) - r(pi(x))| measured on the circle.
  double semiconjugacy_residual(double x) const {
    double e = project(circle_map(x)) - project(x) - alpha_;
    e -= std::round(e);
    return std::abs(e);
  }

 private:
  struct Gap {
    int n;
    double theta;
    double length;
    double start;  // unscaled
  };

  static double wrap(double x) {
    double u = x - std::floor(x);
    return u >= 1.0 ? 0.0 : u;
  }
  const Gap& gap(int n) const { return gaps_[by_index_.at(static_cast<std::size_t>(n + sched_.cutoff))]; }
  // last gap starting at or before s, -1 if none
  long locate(double s) const {
    auto it = std::upper_bound(gaps_.begin(), gaps_.end(), s, [](double v, const Gap& g) { return v < g.start; });
    return static_cast<long>(it - gaps_.begin()) - 1;
  }
  double project_unscaled(double s, long i) const {
    if (i < 0) return s;
    const auto& g = gaps_[static_cast<std::size_t>(i)];
    return s - (g.start + g.length - g.theta);
  }
  // blown-up position of a circle point that is not an inserted orbit point
  double position(double theta) const {
    auto it = std::upper_bound(gaps_.begin(), gaps_.end(), theta, [](double v, const Gap& g) { return v < g.theta; });
    if (it == gaps_.begin()) return theta;
    const auto& g = *(it - 1);
    if (theta == g.theta) return g.start;
    return theta + (g.start + g.length - g.theta);
  }
  double next_theta(double t) const { return wrap(t + alpha_); }
  double prev_theta(double t) const { return wrap(t - alpha_); }

  double alpha_;
  DenjoySchedule sched_;
  std::vector<Gap> gaps_;  // sorted by theta
  std::vector<std::size_t> by_index_;
  double total_ = 1;
};

struct PeriodicCheck {
  int max_period = 0;
  std::size_t cells = 0;
  std::size_t refined = 0;     // cells that needed bisection
  std::size_t unresolved = 0;  // cells still ambiguous at the depth limit
  bool found = false;          // some cell certainly contains a solution
  bool none() const { return !found && unresolved == 0; }
};

/// Root isolation of F^p(x) - x - k on [0, 1) for p <= max_period: on a cell
/// [u, v], monotonicity of F^p puts F^p(x) - x in (F^p(u) - v, F^p(v) - u);
/// cells whose bracket contains an integer are bisected.
inline PeriodicCheck periodic_point_check(const DenjoySystem& d, int max_period, std::size_t grid = 2000, int depth = 30) {
  PeriodicCheck r;
  r.max_period = max_period;
  auto iter = [&](double x, int p) {
    for (int i = 0; i < p; ++i) x = d.lift(x);
    return x;
  };
  for (int p = 1; p <= max_period; ++p) {
    std::vector<double> fx(grid + 1);
    for (std::size_t i = 0; i <= grid; ++i) fx[i] = iter(static_cast<double>(i) / static_cast<double>(grid), p);
    for (std::size_t i = 0; i < grid; ++i) {
      ++r.cells;
      double u = static_cast<double>(i) / static_cast<double>(grid), v = static_cast<double>(i + 1) / static_cast<double>(grid);
      // stack of (u, v, F^p(u), F^p(v), depth)
      struct Cell {
        double u, v, fu, fv;
        int depth;
      };
      std::vector<Cell> stack{{u, v, fx[i], fx[i + 1], 0}};
      bool refined = false;
      while (!stack.empty()) {
        auto c = stack.back();
        stack.pop_back();
        double lo = c.fu - c.v, hi = c.fv - c.u;
        if (!(std::floor(lo) + 1 < hi)) continue;  // no integer strictly inside
        if (std::abs(c.fu - c.u - std::round(c.fu - c.u)) == 0 || std::abs(c.fv - c.v - std::round(c.fv - c.v)) == 0) {
          r.found = true;
          continue;
        }
        if (c.depth >= depth) {
          ++r.unresolved;
          continue;
        }
        refined = true;
        double m = 0.5 * (c.u + c.v), fm = iter(m, p);
        stack.push_back({c.u, m, c.fu, fm, c.depth + 1});
        stack.push_back({m, c.v, fm, c.fv, c.depth + 1});
      }
      if (refined) ++r.refined;
    }
  }
  return r;
}

/// Map F(T - x) = T - F_0(x) on a window of a tiling with integer vertices.
inline FunctionMap<double> denjoy_map(const DenjoySystem& d, const TilingWindow<double>& w) {
  for (std::size_t i = 0; i <= w.tile_count(); ++i)
    if (w.vertex_d(i) != std::round(w.vertex_d(i))) throw std::invalid_argument("denjoy map needs integer tile lengths");
  auto check = [&w](double y) {
    if (y < w.front() || w.back() < y) throw OutOfWindow("orbit left the window at " + std::to_string(y));
    return y;
  };
  return FunctionMap<double>(
      w, [&d, check](const double& x) { return check(d.lift(check(x))); },
      [&d, check](const double& x) { return check(d.lift_inverse(check(x))); }, 1.0, true, "denjoy");
}

}  // namespace tilerot
