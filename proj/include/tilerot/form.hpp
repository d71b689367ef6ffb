#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tilerot/collar.hpp"
#include "tilerot/scalar.hpp"
#include "tilerot/system.hpp"
#include "tilerot/window.hpp"

namespace tilerot {

/// Data of one collared tile: total weight, and optionally a piecewise-linear
/// density sampled at n+1 evenly spaced points of [0, L] with its running
/// integral. Without samples the density is the constant weight / L.
template <Scalar S>
struct FormEntry {
  S weight{};
  std::vector<double> density;
  std::vector<double> cumulative;
};

/// Strongly pattern-equivariant 1-form: densities per collared tile.
template <Scalar S>
class SpeForm {
 public:
  SpeForm() = default;
  SpeForm(std::string name, CollaredAlphabet alphabet, std::vector<S> letter_lengths, std::vector<FormEntry<S>> entries)
      : name_(std::move(name)),
        alphabet_(std::move(alphabet)),
        lengths_(std::move(letter_lengths)),
        entries_(std::move(entries)) {
    if (entries_.size() != alphabet_.size()) throw std::invalid_argument("form needs one entry per collared label");
    for (std::size_t k = 0; k < entries_.size(); ++k) prepare(static_cast<int>(k));
  }

  const std::string& name() const { return name_; }
  SpeForm& rename(std::string n) {
    name_ = std::move(n);
    return *this;
  }
  int depth() const { return alphabet_.depth(); }
  const CollaredAlphabet& alphabet() const { return alphabet_; }
  const std::vector<FormEntry<S>>& entries() const { return entries_; }
  const FormEntry<S>& entry(int key) const { return entries_.at(static_cast<std::size_t>(key)); }
  S tile_length(int key) const { return lengths_.at(static_cast<std::size_t>(alphabet_.bare(key))); }
  const std::vector<S>& letter_lengths() const { return lengths_; }
  S weight(int key) const { return entry(key).weight; }

  bool has_profiles() const {
    return std::any_of(entries_.begin(), entries_.end(), [](const auto& e) { return !e.density.empty(); });
  }

  /// Pattern-equivariance radius: the density on a tile is read from the
  /// tile and `depth` neighbours on each side.
  double radius() const {
    double longest = 0;
    for (const auto& l : lengths_) longest = std::max(longest, to_double(l));
    return (depth() + 1) * longest;
  }

  double density_at(int key, double t) const {
    const auto& e = entry(key);
    double len = to_double(tile_length(key));
    if (e.density.empty()) return to_double(e.weight) / len;
    const auto n = e.density.size() - 1;
    double h = len / static_cast<double>(n);
    double pos = std::clamp(t / h, 0.0, static_cast<double>(n));
    auto j = std::min<std::size_t>(static_cast<std::size_t>(pos), n - 1);
    double s = pos - static_cast<double>(j);
    return e.density[j] + s * (e.density[j + 1] - e.density[j]);
  }

  double min_density() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      if (e.density.empty()) {
        m = std::min(m, to_double(e.weight) / to_double(tile_length(static_cast<int>(k))));
      } else {
        for (double d : e.density) m = std::min(m, d);
      }
    }
    return m;
  }
  double max_density() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      if (e.density.empty()) {
        m = std::max(m, to_double(e.weight) / to_double(tile_length(static_cast<int>(k))));
      } else {
        for (double d : e.density) m = std::max(m, d);
      }
    }
    return m;
  }
  /// Density > 0 everywhere (exactly decided for constant densities).
  bool positive() const {
    for (std::size_t k = 0; k < entries_.size(); ++k) {
      const auto& e = entries_[k];
      if (e.density.empty()) {
        if (!(ScalarTraits<S>::from_int(0) < e.weight)) return false;
      } else if (*std::min_element(e.density.begin(), e.density.end()) <= 0) {
        return false;
      }
    }
    return true;
  }

  /// Integral over the first t units of a tile with collared label `key`.
  S partial(int key, const S& t) const {
    const auto& e = entry(key);
    if (e.density.empty()) return e.weight * (t / tile_length(key));
    if constexpr (ScalarTraits<S>::exact) {
      throw std::domain_error("density profiles are float-only");
    } else {
      const auto n = e.density.size() - 1;
      double len = tile_length(key);
      double h = len / static_cast<double>(n);
      if (t <= 0) return 0.0;
      if (t >= len) return e.cumulative.back();
      auto j = std::min<std::size_t>(static_cast<std::size_t>(t / h), n - 1);
      double s = t - static_cast<double>(j) * h;
      double d0 = e.density[j], d1 = e.density[j + 1];
      return e.cumulative[j] + d0 * s + (d1 - d0) * s * s / (2 * h);
    }
  }

  /// t in [0, L] with partial(key, t) = y (the density must be positive).
  S inverse_partial(int key, const S& y) const {
    const auto& e = entry(key);
    if (e.density.empty()) return y / e.weight * tile_length(key);
    if constexpr (ScalarTraits<S>::exact) {
      throw std::domain_error("density profiles are float-only");
    } else {
      const auto n = e.density.size() - 1;
      double len = tile_length(key);
      double h = len / static_cast<double>(n);
      if (y <= 0) return 0.0;
      if (y >= e.cumulative.back()) return len;
      auto it = std::upper_bound(e.cumulative.begin(), e.cumulative.end(), y);
      auto j = std::min<std::size_t>(static_cast<std::size_t>(it - e.cumulative.begin()) - 1, n - 1);
      double r = y - e.cumulative[j];
      double d0 = e.density[j], d1 = e.density[j + 1];
      double a = (d1 - d0) / (2 * h);
      // a s^2 + d0 s = r, stable root for positive densities
      double disc = std::max(0.0, d0 * d0 + 4 * a * r);
      double s = (2 * r) / (d0 + std::sqrt(disc));
      return std::min(len, static_cast<double>(j) * h + std::clamp(s, 0.0, h));
    }
  }

  SpeForm scaled(const S& c) const {
    auto out = *this;
    for (auto& e : out.entries_) {
      e.weight = e.weight * c;
      if constexpr (!ScalarTraits<S>::exact) {
        for (auto& d : e.density) d *= c;
        for (auto& d : e.cumulative) d *= c;
      }
    }
    return out;
  }

  /// Same form on a deeper collared alphabet.
  SpeForm lifted(const CollaredAlphabet& deeper) const {
    if (deeper.depth() < depth()) throw std::invalid_argument("cannot lift a form to a shallower collar");
    const auto cut = static_cast<std::size_t>(deeper.depth() - depth());
    std::vector<FormEntry<S>> e;
    e.reserve(deeper.size());
    for (const auto& key : deeper.keys()) {
      Word inner = key.substr(cut, key.size() - 2 * cut);
      int k = alphabet_.find(inner);
      if (k < 0) throw std::invalid_argument("collared alphabets are inconsistent");
      e.push_back(entries_[static_cast<std::size_t>(k)]);
    }
    return SpeForm(name_, deeper, lengths_, std::move(e));
  }

 private:
  void prepare(int key) {
    auto& e = entries_[static_cast<std::size_t>(key)];
    if (e.density.empty()) return;
    if constexpr (ScalarTraits<S>::exact) {
      throw std::domain_error("density profiles are float-only");
    } else {
      if (e.density.size() < 2) throw std::invalid_argument("density profile needs at least two samples");
      const auto n = e.density.size() - 1;
      double h = tile_length(key) / static_cast<double>(n);
      e.cumulative.assign(n + 1, 0.0);
      for (std::size_t j = 0; j < n; ++j) e.cumulative[j + 1] = e.cumulative[j] + 0.5 * h * (e.density[j] + e.density[j + 1]);
      e.weight = e.cumulative.back();
    }
  }

  std::string name_;
  CollaredAlphabet alphabet_;
  std::vector<S> lengths_;
  std::vector<FormEntry<S>> entries_;
};

template <Scalar S>
std::vector<S> letter_lengths(const TilingSystem& sys) {
  std::vector<S> out;
  for (std::size_t i = 0; i < sys.size(); ++i) out.push_back(sys.length<S>(static_cast<int>(i)));
  return out;
}

/// Form with constant density on each collared tile, given by its weight.
template <Scalar S>
SpeForm<S> form_from_weights(const TilingSystem& sys, const CollaredAlphabet& alphabet, std::vector<S> weights,
                             std::string name) {
  if (weights.size() != alphabet.size()) throw std::invalid_argument("one weight per collared label required");
  std::vector<FormEntry<S>> e(weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) e[k].weight = weights[k];
  return SpeForm<S>(std::move(name), alphabet, letter_lengths<S>(sys), std::move(e));
}

/// Depth-0 form with weights per bare label.
template <Scalar S>
SpeForm<S> form_from_letter_weights(const TilingSystem& sys, std::vector<S> weights, std::string name) {
  return form_from_weights<S>(sys, collar(sys, 0), std::move(weights), std::move(name));
}

template <Scalar S>
SpeForm<S> dx_form(const TilingSystem& sys) {
  return form_from_letter_weights<S>(sys, letter_lengths<S>(sys), "dx");
}

/// Integrates to 1 on each tile labelled `label`, 0 elsewhere.
template <Scalar S>
SpeForm<S> indicator_form(const TilingSystem& sys, std::string_view label) {
  std::vector<S> w(sys.size(), ScalarTraits<S>::from_int(0));
  w[static_cast<std::size_t>(sys.letter(label))] = ScalarTraits<S>::from_int(1);
  return form_from_letter_weights<S>(sys, std::move(w), "i:" + std::string(label));
}

/// Integrates to 1 on tiles with collared label `key` of `alphabet`.
template <Scalar S>
SpeForm<S> collared_indicator(const TilingSystem& sys, const CollaredAlphabet& alphabet, int key) {
  std::vector<S> w(alphabet.size(), ScalarTraits<S>::from_int(0));
  w.at(static_cast<std::size_t>(key)) = ScalarTraits<S>::from_int(1);
  return form_from_weights<S>(sys, alphabet, std::move(w), "i:" + sys.spell(alphabet.key(key)));
}

/// Float form with densities sampled from `density(key, t)` at
/// `samples`+1 points per tile.
template <class Fn>
SpeForm<double> form_from_density(const TilingSystem& sys, const CollaredAlphabet& alphabet, Fn density,
                                  std::size_t samples, std::string name) {
  if (samples < 1) throw std::invalid_argument("need at least one segment per tile");
  std::vector<FormEntry<double>> e(alphabet.size());
  for (std::size_t k = 0; k < alphabet.size(); ++k) {
    double len = sys.lengths[static_cast<std::size_t>(alphabet.bare(static_cast<int>(k)))];
    e[k].density.resize(samples + 1);
    for (std::size_t j = 0; j <= samples; ++j)
      e[k].density[j] = density(alphabet.key(static_cast<int>(k)), len * static_cast<double>(j) / static_cast<double>(samples));
  }
  return SpeForm<double>(std::move(name), alphabet, sys.lengths, std::move(e));
}

/// sum_i c_i * form_i, lifted to the deepest collar among the terms.
template <Scalar S>
SpeForm<S> linear_combination(const TilingSystem& sys, const std::vector<std::pair<S, SpeForm<S>>>& terms,
                              std::string name) {
  if (terms.empty()) throw std::invalid_argument("empty linear combination");
  int depth = 0;
  for (const auto& [c, f] : terms) depth = std::max(depth, f.depth());
  CollaredAlphabet alpha = collar(sys, depth);
  std::vector<SpeForm<S>> lifted;
  std::size_t samples = 0;
  for (const auto& [c, f] : terms) {
    lifted.push_back(f.lifted(alpha).scaled(c));
    for (const auto& e : f.entries())
      if (!e.density.empty()) samples = std::max(samples, e.density.size() - 1);
  }
  std::vector<FormEntry<S>> out(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    S w = ScalarTraits<S>::from_int(0);
    for (const auto& f : lifted) w = w + f.weight(static_cast<int>(k));
    out[k].weight = w;
    if constexpr (!ScalarTraits<S>::exact) {
      if (samples > 0) {
        double len = sys.lengths[static_cast<std::size_t>(alpha.bare(static_cast<int>(k)))];
        out[k].density.assign(samples + 1, 0.0);
        for (const auto& f : lifted) {
          const auto& e = f.entry(static_cast<int>(k));
          if (!e.density.empty() && samples % (e.density.size() - 1) != 0)
            throw std::invalid_argument("density grids of combined forms do not nest");
          for (std::size_t j = 0; j <= samples; ++j)
            out[k].density[j] += f.density_at(static_cast<int>(k), len * static_cast<double>(j) / static_cast<double>(samples));
        }
      }
    }
  }
  return SpeForm<S>(std::move(name), alpha, letter_lengths<S>(sys), std::move(out));
}

// ---------------------------------------------------------------------------
// Forms on windows

/// A form evaluated along one window: collared label and running integral at
/// every tile. Holds a pointer to the window, which must outlive it.
template <Scalar S>
class BoundForm {
 public:
  BoundForm() = default;
  BoundForm(SpeForm<S> form, const TilingWindow<S>& window) : form_(std::move(form)), window_(&window) {
    keys_ = collared_labels(window, form_.alphabet());
    const auto d = static_cast<std::size_t>(form_.depth());
    const auto n = window.tile_count();
    if (n < 2 * d + 1) throw OutOfWindow("window too short for collar depth " + std::to_string(d));
    first_ = d;
    last_ = n - d;  // valid tiles are [first_, last_)
    for (std::size_t i = first_; i < last_; ++i)
      if (keys_[i] < 0)
        throw std::invalid_argument("window context at tile " + std::to_string(i) + " is not a legal collared label");
    prefix_.assign(n + 1, ScalarTraits<S>::from_int(0));
    if constexpr (ScalarTraits<S>::exact) {
      for (std::size_t i = first_; i < last_; ++i) prefix_[i + 1] = prefix_[i] + form_.weight(keys_[i]);
    } else {
      long double acc = 0;
      for (std::size_t i = first_; i < last_; ++i) {
        acc += static_cast<long double>(form_.weight(keys_[i]));
        prefix_[i + 1] = static_cast<double>(acc);
      }
    }
    // shift so the running integral is 0 at the window origin when possible
    std::size_t o = std::clamp(window.origin_index(), first_, last_);
    S shift = prefix_[o];
    for (std::size_t i = first_; i <= last_; ++i) prefix_[i] = prefix_[i] - shift;
    monotone_ = true;
    for (std::size_t i = first_; i < last_; ++i) monotone_ = monotone_ && prefix_[i] < prefix_[i + 1];
  }

  const SpeForm<S>& form() const { return form_; }
  const TilingWindow<S>& window() const { return *window_; }
  const std::vector<int>& keys() const { return keys_; }
  int key(std::size_t tile) const { return keys_[tile]; }
  /// Domain where the collar is known.
  const S& lo() const { return window_->vertices()[first_]; }
  const S& hi() const { return window_->vertices()[last_]; }
  std::size_t first_tile() const { return first_; }
  std::size_t last_tile() const { return last_; }
  const S& prefix(std::size_t vertex) const { return prefix_[vertex]; }

  /// Running integral from the window origin to x.
  S cumulative(const S& x) const {
    std::size_t hint = 0;
    return cumulative(x, hint);
  }
  S cumulative(const S& x, std::size_t& hint) const {
    if (x == hi()) return prefix_[last_];
    check(x);
    std::size_t i = window_->tile_near(x, hint);
    hint = i;
    return prefix_[i] + form_.partial(keys_[i], x - window_->left(i));
  }

  S integrate(const S& x1, const S& x2) const { return cumulative(x2) - cumulative(x1); }

  /// The point x with cumulative(x) = c. Needs a positive form.
  S inverse(const S& c) const {
    std::size_t hint = 0;
    return inverse(c, hint);
  }
  S inverse(const S& c, std::size_t& hint) const {
    if (!monotone_) throw std::domain_error("inverse of a non-positive form");
    if (c < prefix_[first_] || prefix_[last_] < c)
      throw OutOfWindow("integral value " + ScalarTraits<S>::str(c) + " outside the window's range");
    std::size_t i = hint;
    if (!(i >= first_ && i < last_ && !(c < prefix_[i]) && c < prefix_[i + 1])) {
      // local walk first, then bisection
      bool found = false;
      if (i >= first_ && i < last_) {
        for (int step = 0; step < 8 && !found; ++step) {
          if (c < prefix_[i] && i > first_) {
            --i;
          } else if (!(c < prefix_[i + 1]) && i + 1 < last_) {
            ++i;
          }
          found = !(c < prefix_[i]) && c < prefix_[i + 1];
        }
      }
      if (!found) {
        auto it = std::upper_bound(prefix_.begin() + static_cast<std::ptrdiff_t>(first_),
                                   prefix_.begin() + static_cast<std::ptrdiff_t>(last_) + 1, c);
        i = static_cast<std::size_t>(it - prefix_.begin()) - 1;
        if (i >= last_) i = last_ - 1;
      }
    }
    hint = i;
    return window_->left(i) + form_.inverse_partial(keys_[i], c - prefix_[i]);
  }

 private:
  void check(const S& x) const {
    if (x < lo() || hi() < x)
      throw OutOfWindow("point " + ScalarTraits<S>::str(x) + " outside the collared part of the window");
  }

  SpeForm<S> form_;
  const TilingWindow<S>* window_ = nullptr;
  std::vector<int> keys_;
  std::vector<S> prefix_;
  std::size_t first_ = 0, last_ = 0;
  bool monotone_ = false;
};

// ---------------------------------------------------------------------------
// sPE functions

/// Continuous sPE function, linear inside tiles, whose vertex values depend on
/// the `depth` labels on each side of the vertex.
template <Scalar S>
class SpeFunction {
 public:
  SpeFunction(int depth, std::map<Word, S> vertex_values) : depth_(depth), values_(std::move(vertex_values)) {
    if (depth_ < 1) throw std::invalid_argument("sPE function depth must be >= 1");
  }
  int depth() const { return depth_; }
  const std::map<Word, S>& values() const { return values_; }

  S at_context(const Word& ctx) const {
    auto it = values_.find(ctx);
    if (it == values_.end()) throw std::invalid_argument("sPE function undefined on a vertex context");
    return it->second;
  }
  S at_vertex(const TilingWindow<S>& w, std::size_t v) const {
    const auto d = static_cast<std::size_t>(depth_);
    if (v < d || v + d > w.tile_count()) throw OutOfWindow("vertex context runs off the window");
    return at_context(w.labels().substr(v - d, 2 * d));
  }
  S operator()(const TilingWindow<S>& w, const S& x) const {
    std::size_t i = w.tile_at(x);
    S g0 = at_vertex(w, i), g1 = at_vertex(w, i + 1);
    return g0 + (g1 - g0) * ((x - w.left(i)) / w.tile_length(i));
  }

  /// dg as a form on collared tiles of depth `depth` (contexts x_{-d}..x_d).
  SpeForm<S> differential(const TilingSystem& sys) const {
    auto alpha = collar(sys, depth_);
    const auto d = static_cast<std::size_t>(depth_);
    std::vector<S> w;
    for (const auto& key : alpha.keys()) w.push_back(at_context(key.substr(1, 2 * d)) - at_context(key.substr(0, 2 * d)));
    return form_from_weights<S>(sys, alpha, std::move(w), "dg");
  }

  /// Vertex contexts of length 2*depth occurring in legal tilings.
  static std::set<Word> contexts(const TilingSystem& sys, int depth) {
    return legal_factors(sys, static_cast<std::size_t>(2 * depth));
  }

 private:
  int depth_;
  std::map<Word, S> values_;
};

// ---------------------------------------------------------------------------
// Supertile integrals

struct SupertileIntegral {
  int level = 0;
  std::string unit;
  double min = 0;  // over occurring neighbour contexts
  double max = 0;
  bool well_defined = true;
};

struct SupertileTable {
  std::vector<SupertileIntegral> rows;
  int equal_from = -1;  // least level from which every unit agrees (and stays so); -1 if never
  int top_level = 0;
};

namespace detail {

// Integral of a collared form over one unit, split so that units can be
// composed without expanding them: `inner` covers tiles whose whole collar
// lies inside the unit; the 2d letters at each end are kept for the rest.
template <Scalar S>
struct UnitIntegral {
  S inner{};
  Word head;  // first 2d letters
  Word tail;  // last 2d letters
};

template <Scalar S>
S window_sum(const SpeForm<S>& form, const Word& w, std::size_t from, std::size_t to) {
  // tiles [from, to) of w whose collars lie inside w
  const auto d = static_cast<std::size_t>(form.depth());
  S sum = ScalarTraits<S>::from_int(0);
  for (std::size_t i = std::max(from, d); i < to && i + d < w.size(); ++i) {
    int k = form.alphabet().find(w.substr(i - d, 2 * d + 1));
    if (k < 0) throw std::invalid_argument("illegal collared context in supertile integral");
    sum = sum + form.weight(k);
  }
  return sum;
}

template <Scalar S>
UnitIntegral<S> unit_integral_from_word(const SpeForm<S>& form, const Word& w) {
  const auto d = static_cast<std::size_t>(form.depth());
  UnitIntegral<S> u;
  u.inner = window_sum(form, w, 0, w.size());
  u.head = w.substr(0, 2 * d);
  u.tail = w.substr(w.size() - 2 * d);
  return u;
}

// Tiles straddling a junction: the last d tiles of the left piece and the
// first d tiles of the right one.
template <Scalar S>
S junction_sum(const SpeForm<S>& form, const Word& left_tail, const Word& right_head) {
  const auto d = static_cast<std::size_t>(form.depth());
  if (d == 0) return ScalarTraits<S>::from_int(0);
  Word w = left_tail + right_head;  // 4d letters; tiles d .. 3d-1 have full collars
  return window_sum(form, w, d, 3 * d);
}

}  // namespace detail

/// Integrals of `form` over every supertile kind (fusion) or letter
/// supertile (substitution) for levels up to `up_to_level`, computed by
/// composition rather than expansion. For collared forms the integral of a
/// unit depends on its neighbours; each row records the range over the
/// neighbour contexts that occur.
template <Scalar S>
SupertileTable supertile_integrals(const SpeForm<S>& form, const TilingSystem& sys, int up_to_level,
                                   double tolerance = kDefaultTolerance) {
  const auto d = static_cast<std::size_t>(form.depth());
  const std::size_t units = detail::unit_count(sys);
  const int first = sys.is_fusion() ? sys.fusion().base_level : 0;
  if (up_to_level < first) throw std::invalid_argument("level below the first supertile level");
  auto unit_name = [&](std::size_t u) {
    return sys.is_fusion() ? sys.fusion().kind_names[u] : sys.alphabet[u];
  };

  // explicit expansion until every unit is at least 2d letters long
  int level = first;
  std::vector<detail::UnitIntegral<S>> cur(units);
  auto long_enough = [&](int l) {
    auto counts = unit_letter_counts(sys, l);
    for (const auto& row : counts) {
      double total = 0;
      for (double c : row) total += c;
      if (total < static_cast<double>(2 * d)) return false;
    }
    return true;
  };
  SupertileTable table;
  table.top_level = up_to_level;
  for (; level <= up_to_level; ++level) {
    if (long_enough(level)) break;
  }
  if (level > up_to_level) throw std::runtime_error("supertiles shorter than the form's collar at every level");
  for (std::size_t u = 0; u < units; ++u) cur[u] = detail::unit_integral_from_word(form, detail::expand_unit_index(sys, static_cast<int>(u), level));

  std::vector<std::pair<int, std::vector<std::pair<S, S>>>> ranges;  // per level: per unit (min,max)
  auto record = [&](int l, const std::vector<detail::UnitIntegral<S>>& us) {
    auto pairs = detail::unit_pairs(sys, l);
    std::vector<std::pair<S, S>> row;
    for (std::size_t u = 0; u < units; ++u) {
      std::vector<std::size_t> lefts, rights;
      for (auto [x, y] : pairs) {
        if (static_cast<std::size_t>(y) == u) lefts.push_back(static_cast<std::size_t>(x));
        if (static_cast<std::size_t>(x) == u) rights.push_back(static_cast<std::size_t>(y));
      }
      if (d == 0) {
        lefts = {u};
        rights = {u};
      }
      bool any = false;
      S mn{}, mx{};
      for (auto l_ : lefts)
        for (auto r_ : rights) {
          // first d tiles of u sit at [2d, 3d) of tail+head; its last d at [d, 2d)
          S left_edge = detail::window_sum(form, us[l_].tail + us[u].head, 2 * d, 3 * d);
          S right_edge = detail::window_sum(form, us[u].tail + us[r_].head, d, 2 * d);
          S total = us[u].inner + left_edge + right_edge;
          if (!any) {
            mn = mx = total;
            any = true;
          } else {
            if (total < mn) mn = total;
            if (mx < total) mx = total;
          }
        }
      if (!any) throw std::runtime_error("unit " + unit_name(u) + " has no legal neighbours at level " + std::to_string(l));
      row.emplace_back(mn, mx);
    }
    ranges.emplace_back(l, std::move(row));
  };
  record(level, cur);
  for (int l = level + 1; l <= up_to_level; ++l) {
    std::vector<detail::UnitIntegral<S>> up(units);
    for (std::size_t u = 0; u < units; ++u) {
      auto& out = up[u];
      out.inner = ScalarTraits<S>::from_int(0);
      // walk the composition with true repetition counts
      std::vector<std::pair<std::vector<int>, std::uint64_t>> blocks;
      if (!sys.is_fusion()) {
        std::vector<int> seq;
        for (char c : sys.substitution().images[u]) seq.push_back(static_cast<unsigned char>(c));
        blocks.emplace_back(seq, 1);
      } else {
        for (const auto& b : sys.fusion().pattern[u]) blocks.emplace_back(b.kinds, sys.fusion().count(b, l));
      }
      int prev = -1;
      for (const auto& [kinds, times] : blocks) {
        S once = ScalarTraits<S>::from_int(0);
        for (std::size_t i = 0; i < kinds.size(); ++i) {
          once = once + cur[static_cast<std::size_t>(kinds[i])].inner;
          if (i + 1 < kinds.size())
            once = once + detail::junction_sum(form, cur[static_cast<std::size_t>(kinds[i])].tail,
                                               cur[static_cast<std::size_t>(kinds[i + 1])].head);
        }
        S wrap = ScalarTraits<S>::from_int(0);
        if (times > 1)
          wrap = detail::junction_sum(form, cur[static_cast<std::size_t>(kinds.back())].tail,
                                      cur[static_cast<std::size_t>(kinds.front())].head);
        out.inner = out.inner + once * ScalarTraits<S>::from_int(static_cast<std::int64_t>(times)) +
                    wrap * ScalarTraits<S>::from_int(static_cast<std::int64_t>(times) - 1);
        if (prev >= 0)
          out.inner = out.inner + detail::junction_sum(form, cur[static_cast<std::size_t>(prev)].tail,
                                                       cur[static_cast<std::size_t>(kinds.front())].head);
        prev = kinds.back();
      }
      int head_unit = blocks.front().first.front();
      out.head = cur[static_cast<std::size_t>(head_unit)].head;
      out.tail = cur[static_cast<std::size_t>(prev)].tail;
    }
    cur = std::move(up);
    record(l, cur);
  }

  // rows and equality level
  std::vector<bool> equal_at;
  for (const auto& [l, row] : ranges) {
    bool all_equal = true;
    for (std::size_t u = 0; u < units; ++u) {
      SupertileIntegral r;
      r.level = l;
      r.unit = unit_name(u);
      r.min = to_double(row[u].first);
      r.max = to_double(row[u].second);
      r.well_defined = ScalarTraits<S>::equal(row[u].first, row[u].second, tolerance);
      table.rows.push_back(r);
      all_equal = all_equal && r.well_defined &&
                  ScalarTraits<S>::equal(row[u].first, row[0].first, tolerance * std::max(1.0, std::abs(r.min)));
    }
    equal_at.push_back(all_equal);
  }
  for (std::size_t i = equal_at.size(); i-- > 0;) {
    if (!equal_at[i]) break;
    table.equal_from = ranges[i].first;
  }
  return table;
}

}  // namespace tilerot
