#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/form.hpp"
#include "tilerot/window.hpp"

namespace tilerot {

/// Self-map f_T(x) = x + phi_T(x) of one tiling T, realized on a window of T.
/// Subclasses hold a pointer to the window, which must outlive them.
template <Scalar S>
class SpeMap {
 public:
  virtual ~SpeMap() = default;

  virtual const TilingWindow<S>& window() const = 0;
  /// f(x). `hint` caches a tile index between calls. Throws OutOfWindow when
  /// x or f(x) leaves the part of the window where the map is known.
  virtual S apply(const S& x, std::size_t& hint) const = 0;
  virtual bool invertible() const { return false; }
  virtual S apply_inverse(const S& x, std::size_t& hint) const {
    (void)x;
    (void)hint;
    throw std::logic_error("no inverse available for " + describe());
  }
  /// Radius of the patch that determines the displacement at a point.
  virtual double radius() const = 0;
  /// min |phi| > 0, certified from the map's data.
  virtual bool fixed_point_free() const = 0;
  virtual std::string describe() const = 0;
  /// Closed-form tag: f(x) = x + c.
  virtual std::optional<S> translation() const { return std::nullopt; }

  S apply(const S& x) const {
    std::size_t hint = 0;
    return apply(x, hint);
  }
  S displacement(const S& x) const { return apply(x) - x; }
};

template <Scalar S>
using MapPtr = std::shared_ptr<const SpeMap<S>>;

/// f(x) = x + c.
template <Scalar S>
class TranslationMap : public SpeMap<S> {
 public:
  using SpeMap<S>::apply;
  TranslationMap(const TilingWindow<S>& w, S c) : w_(&w), c_(std::move(c)) {}
  const TilingWindow<S>& window() const override { return *w_; }
  S apply(const S& x, std::size_t&) const override { return check(x + c_); }
  bool invertible() const override { return true; }
  S apply_inverse(const S& x, std::size_t&) const override { return check(x - c_); }
  double radius() const override { return 0.0; }
  bool fixed_point_free() const override { return !(c_ == ScalarTraits<S>::from_int(0)); }
  std::string describe() const override { return "translation:" + ScalarTraits<S>::str(c_); }
  std::optional<S> translation() const override { return c_; }

 private:
  S check(const S& y) const {
    if (y < w_->front() || w_->back() < y) throw OutOfWindow("orbit left the window at " + ScalarTraits<S>::str(y));
    return y;
  }
  const TilingWindow<S>* w_;
  S c_;
};

/// Piecewise-linear displacement profile per collared tile, sampled at n+1
/// evenly spaced points. Float only.
struct DisplacementProfile {
  CollaredAlphabet alphabet;
  std::vector<double> lengths;  // per bare letter
  std::vector<std::vector<double>> samples;  // per collared key
  std::string name = "phi";

  double radius() const {
    double longest = *std::max_element(lengths.begin(), lengths.end());
    double reach = 0;
    for (const auto& s : samples)
      for (double v : s) reach = std::max(reach, std::abs(v));
    return (alphabet.depth() + 1) * longest + reach;
  }

  double value(int key, double t) const {
    const auto& s = samples[static_cast<std::size_t>(key)];
    const auto n = s.size() - 1;
    double len = lengths[static_cast<std::size_t>(alphabet.bare(key))];
    double pos = std::clamp(t / len * static_cast<double>(n), 0.0, static_cast<double>(n));
    auto j = std::min<std::size_t>(static_cast<std::size_t>(pos), n - 1);
    double u = pos - static_cast<double>(j);
    return s[j] + u * (s[j + 1] - s[j]);
  }

  /// Continuity across every legal junction and strict monotonicity of
  /// x + phi(x) inside tiles. Throws std::invalid_argument on violation.
  void validate(double tol = 1e-12) const {
    if (samples.size() != alphabet.size()) throw std::invalid_argument("displacement: one profile per collared label");
    const auto d = static_cast<std::size_t>(alphabet.depth());
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const auto& s = samples[k];
      if (s.size() < 2) throw std::invalid_argument("displacement profile needs at least two samples");
      double len = lengths[static_cast<std::size_t>(alphabet.bare(static_cast<int>(k)))];
      double h = len / static_cast<double>(s.size() - 1);
      for (std::size_t j = 0; j + 1 < s.size(); ++j)
        if (!(h + s[j + 1] - s[j] > 0))
          throw std::invalid_argument("displacement of " + std::to_string(k) +
                                      " breaks orientation: x + phi(x) not increasing");
      if (d == 0) continue;
      const Word& key = alphabet.key(static_cast<int>(k));
      for (std::size_t m = 0; m < samples.size(); ++m) {
        const Word& next = alphabet.key(static_cast<int>(m));
        if (key.compare(1, 2 * d, next, 0, 2 * d) != 0) continue;
        if (std::abs(s.back() - samples[m].front()) > tol)
          throw std::invalid_argument("displacement is discontinuous between collared labels " + std::to_string(k) +
                                      " and " + std::to_string(m));
      }
    }
    if (d == 0) {
      // every letter can meet every letter it borders; require one common vertex value
      double v0 = samples.front().front();
      for (const auto& s : samples)
        if (std::abs(s.front() - v0) > tol || std::abs(s.back() - v0) > tol)
          throw std::invalid_argument("letter displacement profiles must agree at tile endpoints");
    }
  }

  bool fixed_point_free() const {
    bool pos = true, neg = true;
    for (const auto& s : samples)
      for (double v : s) {
        pos = pos && v > 0;
        neg = neg && v < 0;
      }
    return pos || neg;
  }
};

/// Samples `fn(key, t)` at `segments`+1 points of every collared tile.
template <class Fn>
DisplacementProfile displacement_from_function(const TilingSystem& sys, const CollaredAlphabet& alphabet, Fn fn,
                                               std::size_t segments, std::string name = "phi") {
  DisplacementProfile p{alphabet, sys.lengths, {}, std::move(name)};
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    double len = sys.lengths[static_cast<std::size_t>(alphabet.bare(static_cast<int>(k)))];
    std::vector<double> s(segments + 1);
    for (std::size_t j = 0; j <= segments; ++j)
      s[j] = fn(alphabet.key(static_cast<int>(k)), len * static_cast<double>(j) / static_cast<double>(segments));
    p.samples.push_back(std::move(s));
  }
  p.validate(1e-9);
  return p;
}

class DisplacementMap : public SpeMap<double> {
 public:
  using SpeMap<double>::apply;
  DisplacementMap(DisplacementProfile profile, const TilingWindow<double>& w) : p_(std::move(profile)), w_(&w) {
    p_.validate(1e-9);
    keys_ = collared_labels(w, p_.alphabet);
    const auto d = static_cast<std::size_t>(p_.alphabet.depth());
    if (w.tile_count() < 2 * d + 1) throw OutOfWindow("window too short for the displacement's collar");
    first_ = d;
    last_ = w.tile_count() - d;
    for (std::size_t i = first_; i < last_; ++i)
      if (keys_[i] < 0) throw std::invalid_argument("window has a context unknown to the displacement profile");
  }
  const TilingWindow<double>& window() const override { return *w_; }
  const DisplacementProfile& profile() const { return p_; }

  double phi(double x, std::size_t& hint) const {
    if (x < w_->left(first_) || !(x < w_->right(last_ - 1)))
      throw OutOfWindow("point " + std::to_string(x) + " outside the collared part of the window");
    std::size_t i = w_->tile_near(x, hint);
    hint = i;
    return p_.value(keys_[i], x - w_->left(i));
  }
  double apply(const double& x, std::size_t& hint) const override {
    double y = x + phi(x, hint);
    if (y < w_->left(first_) || w_->right(last_ - 1) < y) throw OutOfWindow("orbit left the window at " + std::to_string(y));
    return y;
  }
  double radius() const override { return p_.radius(); }
  bool fixed_point_free() const override { return p_.fixed_point_free(); }
  std::string describe() const override { return "displacement:" + p_.name; }

 private:
  DisplacementProfile p_;
  const TilingWindow<double>* w_;
  std::vector<int> keys_;
  std::size_t first_ = 0, last_ = 0;
};

/// Flow with sPE velocity v, stored through its travel-time form mu = dx/v.
template <Scalar S>
struct SpeFlow {
  SpeForm<S> slowness;
  std::string name = "flow";

  double radius() const { return slowness.radius(); }
  /// Largest distance covered in unit time.
  double max_step() const {
    double m = slowness.min_density();
    if (!(m > 0)) throw std::domain_error("flow velocity must be positive");
    return 1.0 / m;
  }
};

/// Flow whose slowness 1/v is sampled from `velocity(key, t)`.
template <class Fn>
SpeFlow<double> flow_from_velocity(const TilingSystem& sys, const CollaredAlphabet& alphabet, Fn velocity,
                                   std::size_t segments, std::string name = "flow") {
  auto form = form_from_density(
      sys, alphabet,
      [&](const Word& key, double t) {
        double v = velocity(key, t);
        if (!(v > 0)) throw std::invalid_argument("flow velocity must be positive");
        return 1.0 / v;
      },
      segments, "dx/v");
  return {std::move(form), std::move(name)};
}

/// Velocity equal to speeds[l] on letter l, smoothed across each vertex by a
/// raised-cosine ramp of half-width `delta` (depth-1 collared, so each tile
/// sees its neighbours' speeds). delta = 0 gives the step function.
inline SpeFlow<double> smoothed_step_flow(const TilingSystem& sys, const std::vector<double>& speeds, double delta,
                                          std::size_t segments = 64, std::string name = "smoothed_step") {
  if (speeds.size() != sys.size()) throw std::invalid_argument("smoothed_step_flow: one speed per letter");
  double shortest = *std::min_element(sys.lengths.begin(), sys.lengths.end());
  if (delta < 0 || 2 * delta > shortest) throw std::invalid_argument("smoothing width must lie in [0, L_min / 2]");
  constexpr double pi = 3.141592653589793;
  auto speed = [&](char c) { return speeds[static_cast<unsigned char>(c)]; };
  return flow_from_velocity(
      sys, collar(sys, 1),
      [&](const Word& key, double t) {
        const double v = speed(key[1]);
        const double len = sys.lengths[static_cast<unsigned char>(key[1])];
        // ramp from the vertex mean (at distance 0) to v (at distance delta)
        auto ramp = [&](double other, double dist) {
          if (dist >= delta) return v;
          return 0.5 * (v + other) + 0.5 * (v - other) * std::sin(0.5 * pi * dist / delta);
        };
        if (t < len - t) return ramp(speed(key[0]), t);
        return ramp(speed(key[2]), len - t);
      },
      segments, std::move(name));
}

/// Time-1 sampling of a flow: f(x) solves int_x^{f(x)} dx/v = 1.
template <Scalar S>
class FlowMap : public SpeMap<S> {
 public:
  using SpeMap<S>::apply;
  FlowMap(SpeFlow<S> flow, const TilingWindow<S>& w) : flow_(std::move(flow)), bound_(flow_.slowness, w) {
    if (!flow_.slowness.positive()) throw std::invalid_argument("time-1 sampling needs a positive velocity");
  }
  const TilingWindow<S>& window() const override { return bound_.window(); }
  const BoundForm<S>& form() const { return bound_; }
  const SpeFlow<S>& flow() const { return flow_; }

  S apply(const S& x, std::size_t& hint) const override {
    return bound_.inverse(bound_.cumulative(x, hint) + ScalarTraits<S>::from_int(1), hint);
  }
  bool invertible() const override { return true; }
  S apply_inverse(const S& x, std::size_t& hint) const override {
    return bound_.inverse(bound_.cumulative(x, hint) - ScalarTraits<S>::from_int(1), hint);
  }
  /// Flow radius plus the largest unit-time displacement.
  double radius() const override { return flow_.radius() + flow_.max_step(); }
  bool fixed_point_free() const override { return true; }
  std::string describe() const override { return "flow_time1:" + flow_.name; }

 private:
  SpeFlow<S> flow_;
  BoundForm<S> bound_;
};

template <Scalar S>
std::shared_ptr<FlowMap<S>> time1_sampling(const SpeFlow<S>& flow, const TilingWindow<S>& w) {
  return std::make_shared<FlowMap<S>>(flow, w);
}

/// Map given by closures (lifts, conjugated maps).
template <Scalar S>
class FunctionMap : public SpeMap<S> {
 public:
  using SpeMap<S>::apply;
  using Fn = std::function<S(const S&)>;
  FunctionMap(const TilingWindow<S>& w, Fn forward, Fn backward, double radius, bool fixed_point_free, std::string name)
      : w_(&w), f_(std::move(forward)), b_(std::move(backward)), r_(radius), fpf_(fixed_point_free), name_(std::move(name)) {}
  const TilingWindow<S>& window() const override { return *w_; }
  S apply(const S& x, std::size_t&) const override { return f_(x); }
  bool invertible() const override { return static_cast<bool>(b_); }
  S apply_inverse(const S& x, std::size_t& hint) const override {
    if (!b_) return SpeMap<S>::apply_inverse(x, hint);
    return b_(x);
  }
  double radius() const override { return r_; }
  bool fixed_point_free() const override { return fpf_; }
  std::string describe() const override { return name_; }

 private:
  const TilingWindow<S>* w_;
  Fn f_, b_;
  double r_;
  bool fpf_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// Orbits

template <Scalar S>
struct OrbitTrace {
  S start{};
  std::vector<S> positions;  // f^n(start) for n = 0..steps
  bool truncated = false;
  std::string reason;

  std::size_t steps() const { return positions.empty() ? 0 : positions.size() - 1; }
};

/// f^n(x0) for n = 0..N (or f^{-n} when `backward`). Leaving the window
/// ends the trace early with `truncated` set.
template <Scalar S>
OrbitTrace<S> iterate(const SpeMap<S>& map, const S& x0, std::size_t n, bool backward = false) {
  OrbitTrace<S> t;
  t.start = x0;
  t.positions.reserve(n + 1);
  t.positions.push_back(x0);
  std::size_t hint = 0;
  S x = x0;
  try {
    for (std::size_t i = 0; i < n; ++i) {
      x = backward ? map.apply_inverse(x, hint) : map.apply(x, hint);
      t.positions.push_back(x);
    }
  } catch (const OutOfWindow& e) {
    t.truncated = true;
    t.reason = e.what();
  }
  return t;
}

}  // namespace tilerot
