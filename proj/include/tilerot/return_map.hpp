#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/map.hpp"
#include "tilerot/system.hpp"

namespace tilerot {

/// First n with f^n(entry) >= right_end. Throws OutOfWindow if the orbit
/// leaves the window first, std::runtime_error past `budget` steps.
template <Scalar S>
std::uint64_t crossing_steps(const SpeMap<S>& map, const S& entry, const S& right_end, std::uint64_t budget = 100'000'000) {
  std::size_t hint = 0;
  S x = entry;
  std::uint64_t n = 0;
  while (x < right_end) {
    if (++n > budget) throw std::runtime_error("crossing_steps: step budget exhausted");
    x = map.apply(x, hint);
  }
  return n;
}

/// phi = 1 + p_l sin(pi t / L_l) on letter l (depth 0). phi = 1 at every
/// vertex; orientation needs |p_l| pi / L_l < 1.
inline DisplacementProfile sine_displacement(const TilingSystem& sys, const std::vector<double>& p, std::size_t segments = 256) {
  if (p.size() != sys.size()) throw std::invalid_argument("sine_displacement: one amplitude per letter");
  constexpr double pi = 3.141592653589793;
  return displacement_from_function(
      sys, collar(sys, 0),
      [&](const Word& key, double t) {
        auto l = static_cast<std::size_t>(static_cast<unsigned char>(key[0]));
        return 1.0 + p[l] * std::sin(pi * t / sys.lengths[l]);
      },
      segments, "sine");
}

/// Level-j return statistics on the separator tile.
struct ReturnLevel {
  int level = 1;
  // rotation numbers of the lifts; rho_* are their fractional parts
  double lift_a = 0, lift_b = 0, lift_ab = 0;
  double rho_a = 0, rho_b = 0, rho_ab = 0;
  double defect = 0;  // lift_ab - lift_a - lift_b
  double margin = 0;  // distance of the defect to the nearest integer
  std::uint64_t m_a = 0, m_b = 0;  // fewest steps across A_j, B_j from the preceding separator
  std::uint64_t iterations = 0;
};

struct CrossingRange {
  std::uint64_t min = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t max = 0;
  void add(std::uint64_t s) {
    min = std::min(min, s);
    max = std::max(max, s);
  }
};

/// Distance between two step ranges (negative when they overlap).
inline double range_separation(const CrossingRange& a, const CrossingRange& b) {
  return std::max(static_cast<double>(a.min) - static_cast<double>(b.max),
                  static_cast<double>(b.min) - static_cast<double>(a.max));
}

/// Return maps on the separator tile for fusion systems shaped like
/// A_1 = a c, B_1 = b c, A_j = (A_{j-1} B_{j-1})^{n_j}, B_j = A^{n_j} B^{n_j}:
/// every kind ends with the separator and is preceded by one. The orbit of f
/// visits every separator tile exactly once (f maps its left vertex to its
/// right vertex), so crossing a supertile is a circle map of the separator.
/// Local coordinates y live in [0, 1) on a separator of length 1.
class ReturnTower {
 public:
  ReturnTower(const TilingSystem& sys, DisplacementProfile phi, int separator, std::vector<std::uint64_t> schedule = {})
      : sys_(&sys), phi_(std::move(phi)), sep_(separator), n_(std::move(schedule)) {
    if (!sys.is_fusion()) throw std::invalid_argument("return maps need a fusion system");
    if (phi_.alphabet.depth() != 0) throw std::invalid_argument("return maps need a depth-0 displacement");
    if (std::abs(sys.lengths.at(static_cast<std::size_t>(sep_)) - 1.0) > 1e-12)
      throw std::invalid_argument("separator tile must have length 1");
    const auto& f = sys.fusion();
    if (f.base_level != 1 || f.kind_names.size() != 2) throw std::invalid_argument("return maps need two kinds at base level 1");
    for (const auto& w : f.base)
      if (w.empty() || static_cast<unsigned char>(w.back()) != sep_) throw std::invalid_argument("every kind must end with the separator");
    if (!phi_.fixed_point_free()) throw std::invalid_argument("return maps need a fixed-point-free map");
    auto key = [&](int l) { return phi_.alphabet.find(Word(1, static_cast<char>(l))); };
    for (const auto& w : f.base) {
      BaseTiles t{{0.0}, {key(sep_)}};
      int prev = sep_;
      for (char c : w) {
        t.left.push_back(t.left.back() + sys.lengths[static_cast<std::size_t>(prev)]);
        prev = static_cast<unsigned char>(c);
        t.key.push_back(key(prev));
      }
      tiles_.push_back(std::move(t));
    }
  }

  const std::vector<std::uint64_t>& schedule() const { return n_; }
  void set_schedule(std::vector<std::uint64_t> n) { n_ = std::move(n); }
  int top_level() const { return 1 + static_cast<int>(n_.size()); }

  /// Local position in the final separator of kind `kind` at `level`, from
  /// local position y in the separator before it. `steps` grows by the
  /// number of iterates taken.
  double cross(int kind, int level, double y, std::uint64_t& steps) const {
    if (level == 1) return cross_base(kind, y, steps);
    const auto& f = sys_->fusion();
    if (level > top_level()) throw std::out_of_range("return tower: no n_j for level " + std::to_string(level));
    const std::uint64_t n = n_[static_cast<std::size_t>(level - 2)];
    for (const auto& b : f.pattern[static_cast<std::size_t>(kind)]) {
      std::uint64_t times = b.scheduled ? n : b.fixed;
      for (std::uint64_t t = 0; t < times; ++t)
        for (int sub : b.kinds) y = cross(sub, level - 1, y, steps);
    }
    return y;
  }

  std::uint64_t steps_from_zero(int kind, int level) const {
    std::uint64_t s = 0;
    cross(kind, level, 0.0, s);
    return s;
  }

  /// Continuous lift of the return map: G(y) + K(0) - K(y), extended by
  /// G(y + m) = G(y) + m.
  double lift(int kind, int level, double y) const {
    double fl = std::floor(y);
    std::uint64_t k = 0;
    double g = cross(kind, level, y - fl, k);
    std::uint64_t k0 = steps_from_zero(kind, level);
    return g + static_cast<double>(k0) - static_cast<double>(k) + fl;
  }

  /// Rotation number of the lift of `kinds` crossed in order, by iteration.
  double lift_rotation(const std::vector<int>& kinds, int level, std::uint64_t iterations) const {
    std::vector<std::uint64_t> k0;
    for (int k : kinds) k0.push_back(steps_from_zero(k, level));
    double y = 0;
    for (std::uint64_t i = 0; i < iterations; ++i)
      for (std::size_t j = 0; j < kinds.size(); ++j) {
        double fl = std::floor(y);
        std::uint64_t s = 0;
        double g = cross(kinds[j], level, y - fl, s);
        y = g + static_cast<double>(k0[j]) - static_cast<double>(s) + fl;
      }
    return y / static_cast<double>(iterations);
  }

  /// Steps across kind `kind` at `level` (first n reaching its right end)
  /// over `entries` evenly spaced entry points on the preceding separator.
  CrossingRange crossing_range(int kind, int level, std::size_t entries = 64) const {
    CrossingRange r;
    for (std::size_t i = 0; i < entries; ++i) {
      std::uint64_t s = 0;
      cross(kind, level, static_cast<double>(i) / static_cast<double>(entries), s);
      r.add(s + 1);  // f maps the final separator's left vertex to its right end
    }
    return r;
  }

  ReturnLevel rotation_numbers(int level, std::uint64_t iterations, std::size_t entries = 64) const {
    ReturnLevel r;
    r.level = level;
    r.iterations = iterations;
    r.lift_a = lift_rotation({0}, level, iterations);
    r.lift_b = lift_rotation({1}, level, iterations);
    r.lift_ab = lift_rotation({0, 1}, level, iterations);
    auto frac = [](double x) { return x - std::floor(x); };
    r.rho_a = frac(r.lift_a);
    r.rho_b = frac(r.lift_b);
    r.rho_ab = frac(r.lift_ab);
    r.defect = r.lift_ab - r.lift_a - r.lift_b;
    r.margin = std::abs(r.defect - std::round(r.defect));
    r.m_a = crossing_range(0, level, entries).min;
    r.m_b = crossing_range(1, level, entries).min;
    return r;
  }

 private:
  double cross_base(int kind, double y, std::uint64_t& steps) const {
    const auto& t = tiles_[static_cast<std::size_t>(kind)];
    const double target = t.left.back();
    double x = y;
    std::size_t i = 0;
    while (x < target) {
      while (i + 1 < t.left.size() && !(x < t.left[i + 1])) ++i;
      x += phi_.value(t.key[i], x - t.left[i]);
      ++steps;
    }
    return x - target;
  }

  // virtual tiles for crossing a base word: the separator at [0, 1), then
  // the word's letters; left.back() is the final separator's left vertex
  struct BaseTiles {
    std::vector<double> left;
    std::vector<int> key;
  };

  const TilingSystem* sys_;
  DisplacementProfile phi_;
  int sep_;
  std::vector<std::uint64_t> n_;
  std::vector<BaseTiles> tiles_;
};

/// Least n making the step ranges of A and B at `level` separate by more
/// than `gap`, starting from the prediction 1 + floor(gap / |defect|) of the
/// level below. `tower`'s schedule is extended with the result. Returns 0
/// when the cap is hit.
inline std::uint64_t choose_n(ReturnTower& tower, int level, double defect, double gap = 2.0, std::uint64_t cap = 10'000,
                              std::size_t entries = 64) {
  if (level != tower.top_level() + 1) throw std::invalid_argument("choose_n: schedule must reach the level below");
  double d = std::abs(defect);
  std::uint64_t n = d > 0 ? static_cast<std::uint64_t>(std::floor(gap / d)) + 1 : 1;
  auto base = tower.schedule();
  for (; n <= cap; ++n) {
    auto trial = base;
    trial.push_back(n);
    tower.set_schedule(trial);
    if (range_separation(tower.crossing_range(0, level, entries), tower.crossing_range(1, level, entries)) > gap) return n;
  }
  tower.set_schedule(base);
  return 0;
}

/// A separator tile, then the level-`level` supertile of `kind` starting at
/// 0, then A_1 (every supertile is preceded by a separator and followed by
/// an A_1).
template <Scalar S>
TilingWindow<S> crossing_window(const TilingSystem& sys, int kind, int level, int separator) {
  const auto& f = sys.fusion();
  Word w(1, static_cast<char>(separator));
  w += expand_kind(sys, kind, level);
  w += f.base[0];
  return coordinatize<S>(sys, std::move(w), 1, {sys.name, level, "c|" + f.kind_names[static_cast<std::size_t>(kind)]});
}

/// Steps across the supertile of a crossing_window from `entries` points on
/// the separator before it.
template <Scalar S>
CrossingRange window_crossing_range(const SpeMap<S>& map, const S& supertile_length, std::size_t entries = 64) {
  CrossingRange r;
  for (std::size_t i = 0; i < entries; ++i) {
    S x = ScalarTraits<S>::from_int(-1) + ScalarTraits<S>::from_quadratic(QuadraticNumber(Rational(static_cast<std::int64_t>(i), static_cast<std::int64_t>(entries))));
    r.add(crossing_steps(map, x, supertile_length));
  }
  return r;
}

struct SineCandidate {
  std::vector<double> p;  // amplitudes per letter
  ReturnLevel level1, level2;
  std::vector<std::uint64_t> schedule;  // n_2, n_3; empty when the search failed
  double separation2 = 0, separation3 = 0;
};

struct SineSearch {
  std::vector<double> grid_a, grid_b, grid_c;
  double min_margin = 0.01;
  std::size_t shortlist = 12;  // best level-1 defects carried to level 2
  std::uint64_t screen_iterations = 4000, iterations1 = 20000, iterations2 = 1000;
  std::uint64_t cap = 10'000;
};

/// Grid search over sine amplitudes (letters a, b, separator c) for
/// parameters whose level-1 and level-2 defects clear `min_margin`. Among the
/// shortlist the one with the smallest n_2 * n_3 wins (ties keep grid order).
inline std::optional<SineCandidate> search_sine_parameters(const TilingSystem& sys, const SineSearch& cfg) {
  struct Screened {
    std::vector<double> p;
    double defect;
  };
  std::vector<Screened> pool;
  for (double pa : cfg.grid_a)
    for (double pb : cfg.grid_b)
      for (double pc : cfg.grid_c) {
        std::vector<double> p{pa, pb, pc};
        ReturnTower t(sys, sine_displacement(sys, p), 2);
        auto r = t.rotation_numbers(1, cfg.screen_iterations, 8);
        if (r.margin >= cfg.min_margin) pool.push_back({p, r.defect});
      }
  std::stable_sort(pool.begin(), pool.end(), [](const auto& x, const auto& y) { return std::abs(x.defect) > std::abs(y.defect); });
  std::optional<SineCandidate> best;
  for (std::size_t i = 0; i < std::min(cfg.shortlist, pool.size()); ++i) {
    SineCandidate c;
    c.p = pool[i].p;
    ReturnTower t(sys, sine_displacement(sys, c.p), 2);
    c.level1 = t.rotation_numbers(1, cfg.iterations1);
    if (c.level1.margin < cfg.min_margin) continue;
    auto n2 = choose_n(t, 2, c.level1.defect, 2.0, cfg.cap);
    if (n2 == 0) continue;
    c.level2 = t.rotation_numbers(2, cfg.iterations2);
    if (c.level2.margin < cfg.min_margin) continue;
    auto n3 = choose_n(t, 3, c.level2.defect, 2.0, cfg.cap);
    if (n3 == 0) continue;
    c.schedule = {n2, n3};
    c.separation2 = range_separation(t.crossing_range(0, 2), t.crossing_range(1, 2));
    c.separation3 = range_separation(t.crossing_range(0, 3), t.crossing_range(1, 3));
    if (!best || n2 * n3 < best->schedule[0] * best->schedule[1]) best = std::move(c);
  }
  return best;
}

}  // namespace tilerot
