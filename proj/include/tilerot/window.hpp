#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/scalar.hpp"
#include "tilerot/system.hpp"

namespace tilerot {

/// Thrown when a query needs tiling data beyond a window's edges.
class OutOfWindow : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct WindowProvenance {
  std::string system;
  int level = 0;
  std::string seed;
};

/// Finite coordinatized factor of a tiling. Vertex `origin_index` sits at 0.
template <Scalar S>
class TilingWindow {
 public:
  TilingWindow() = default;
  TilingWindow(Word labels, std::vector<S> vertices, std::size_t origin_index, double tolerance,
               WindowProvenance provenance = {})
      : labels_(std::move(labels)),
        vertices_(std::move(vertices)),
        origin_index_(origin_index),
        tolerance_(tolerance),
        provenance_(std::move(provenance)) {
    if (vertices_.size() != labels_.size() + 1) throw std::invalid_argument("window needs one more vertex than tiles");
    if (origin_index_ >= vertices_.size()) throw std::invalid_argument("origin index out of range");
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i)
      if (!(vertices_[i] < vertices_[i + 1])) throw std::invalid_argument("window vertices must increase");
  }

  const Word& labels() const { return labels_; }
  const std::vector<S>& vertices() const { return vertices_; }
  std::size_t tile_count() const { return labels_.size(); }
  std::size_t origin_index() const { return origin_index_; }
  double tolerance() const { return tolerance_; }
  const WindowProvenance& provenance() const { return provenance_; }

  int label(std::size_t tile) const { return static_cast<unsigned char>(labels_[tile]); }
  const S& left(std::size_t tile) const { return vertices_[tile]; }
  const S& right(std::size_t tile) const { return vertices_[tile + 1]; }
  S tile_length(std::size_t tile) const { return vertices_[tile + 1] - vertices_[tile]; }
  const S& front() const { return vertices_.front(); }
  const S& back() const { return vertices_.back(); }

  /// Index of the tile [v_i, v_{i+1}) containing x. Throws OutOfWindow when
  /// x is outside [front, back).
  std::size_t tile_at(const S& x) const {
    if (x < vertices_.front() || !(x < vertices_.back()))
      throw OutOfWindow("point " + ScalarTraits<S>::str(x) + " outside window [" +
                        ScalarTraits<S>::str(vertices_.front()) + ", " + ScalarTraits<S>::str(vertices_.back()) + ")");
    auto it = std::upper_bound(vertices_.begin(), vertices_.end(), x);
    return static_cast<std::size_t>(it - vertices_.begin()) - 1;
  }

  /// Same as tile_at but starting a local search from `hint`; cheap for
  /// orbits that move a few tiles per step.
  std::size_t tile_near(const S& x, std::size_t hint) const {
    if (hint >= labels_.size()) return tile_at(x);
    if (x < vertices_.front() || !(x < vertices_.back())) return tile_at(x);
    std::size_t i = hint;
    for (int guard = 0; guard < 16; ++guard) {
      if (x < vertices_[i]) {
        --i;
      } else if (!(x < vertices_[i + 1])) {
        ++i;
      } else {
        return i;
      }
    }
    return tile_at(x);
  }

  /// x with [x-R, x+R] strictly inside the window.
  bool in_safe_interior(const S& x, const S& radius) const {
    return vertices_.front() < x - radius && x + radius < vertices_.back();
  }

  /// Vertex i as a double (for plotting and float dynamics).
  double vertex_d(std::size_t i) const { return to_double(vertices_[i]); }

  /// Same window with float coordinates.
  TilingWindow<double> to_float() const {
    std::vector<double> v;
    v.reserve(vertices_.size());
    for (const auto& x : vertices_) v.push_back(to_double(x));
    return TilingWindow<double>(labels_, std::move(v), origin_index_, tolerance_, provenance_);
  }

 private:
  Word labels_;
  std::vector<S> vertices_;
  std::size_t origin_index_ = 0;
  double tolerance_ = kDefaultTolerance;
  WindowProvenance provenance_;
};

/// Coordinatizes `labels` with the system's lengths; `origin_tile` is the
/// tile whose left vertex becomes 0.
template <Scalar S>
TilingWindow<S> coordinatize(const TilingSystem& sys, Word labels, std::size_t origin_tile, WindowProvenance prov) {
  const std::size_t k = sys.size();
  std::vector<S> len(k);
  for (std::size_t i = 0; i < k; ++i) len[i] = sys.length<S>(static_cast<int>(i));
  // Coordinates come from letter counts relative to the origin, so float
  // vertices carry O(1) rounding instead of a running-sum drift.
  std::vector<long long> before(k, 0);
  for (std::size_t i = 0; i < origin_tile; ++i) ++before[static_cast<unsigned char>(labels[i])];
  std::vector<long long> cnt(k, 0);
  std::vector<S> v(labels.size() + 1);
  for (std::size_t i = 0; i <= labels.size(); ++i) {
    S x = ScalarTraits<S>::from_int(0);
    for (std::size_t l = 0; l < k; ++l)
      if (cnt[l] != before[l]) x = x + ScalarTraits<S>::from_int(cnt[l] - before[l]) * len[l];
    v[i] = x;
    if (i < labels.size()) ++cnt[static_cast<unsigned char>(labels[i])];
  }
  return TilingWindow<S>(std::move(labels), std::move(v), origin_tile, sys.tolerance, std::move(prov));
}

/// Materializes the level-`level` supertile(s) named by `seed`. A two-sided
/// seed `L|R` must be a legal neighbour pair at that level; the origin is
/// placed at their junction.
template <Scalar S>
TilingWindow<S> build_window(const TilingSystem& sys, int level, const Seed& seed) {
  Unit right = resolve_unit(sys, seed.right, level);
  Word word;
  std::size_t origin = 0;
  if (!seed.left.empty()) {
    if (!is_legal_pair(sys, seed.left, seed.right, level))
      throw std::invalid_argument("seed '" + seed.str() + "' is not a legal factor at level " + std::to_string(level));
    Unit left = resolve_unit(sys, seed.left, level);
    word = expand_unit(sys, left, level);
    origin = word.size();
  }
  word += expand_unit(sys, right, level);
  return coordinatize<S>(sys, std::move(word), origin, {sys.name, level, seed.str()});
}

// ---------------------------------------------------------------------------
// Patches

/// Pattern of a window on [x-R, x+R]: labels and left-vertex offsets (relative
/// to x) of every tile meeting the closed interval.
template <Scalar S>
struct Patch {
  S center{};
  S radius{};
  Word labels;
  std::vector<S> offsets;
};

template <Scalar S>
Patch<S> patch_at(const TilingWindow<S>& w, const S& x, const S& radius) {
  if (!w.in_safe_interior(x, radius))
    throw OutOfWindow("patch of radius " + ScalarTraits<S>::str(radius) + " at " + ScalarTraits<S>::str(x) +
                      " touches the window boundary");
  const auto& v = w.vertices();
  S lo = x - radius, hi = x + radius;
  // first tile whose right end >= lo
  auto first = static_cast<std::size_t>(std::lower_bound(v.begin() + 1, v.end(), lo) - v.begin()) - 1;
  // last tile whose left end <= hi
  auto last = static_cast<std::size_t>(std::upper_bound(v.begin(), v.end() - 1, hi) - v.begin()) - 1;
  Patch<S> p{x, radius, {}, {}};
  for (std::size_t i = first; i <= last; ++i) {
    p.labels.push_back(w.labels()[i]);
    p.offsets.push_back(v[i] - x);
  }
  return p;
}

template <Scalar S>
bool match_patches(const Patch<S>& a, const Patch<S>& b, double tolerance = kDefaultTolerance) {
  if (a.labels != b.labels) return false;
  if (!ScalarTraits<S>::equal(a.radius, b.radius, tolerance)) return false;
  for (std::size_t i = 0; i < a.offsets.size(); ++i)
    if (!ScalarTraits<S>::equal(a.offsets[i], b.offsets[i], tolerance)) return false;
  return true;
}

/// All x in the safe interior whose radius-R patch equals the one at x0,
/// ascending (x0 included).
template <Scalar S>
std::vector<S> return_points(const TilingWindow<S>& w, const S& x0, const S& radius) {
  Patch<S> ref = patch_at(w, x0, radius);
  std::size_t i0 = w.tile_at(x0);
  S offset = x0 - w.left(i0);
  std::vector<S> out;
  const int want = w.label(i0);
  for (std::size_t j = 0; j < w.tile_count(); ++j) {
    if (w.label(j) != want) continue;
    S x = w.left(j) + offset;
    if (!(x < w.right(j))) continue;
    if (!w.in_safe_interior(x, radius)) continue;
    if (match_patches(ref, patch_at(w, x, radius), w.tolerance())) out.push_back(x);
  }
  return out;
}

/// Return points of a vertex, as tile indices (j such that vertex j matches
/// vertex i at radius R). Faster path for vertex-anchored queries.
template <Scalar S>
std::vector<std::size_t> vertex_returns(const TilingWindow<S>& w, std::size_t vertex, const S& radius) {
  std::vector<std::size_t> out;
  for (const S& x : return_points(w, w.vertices()[vertex], radius)) {
    auto it = std::lower_bound(w.vertices().begin(), w.vertices().end(), x);
    out.push_back(static_cast<std::size_t>(it - w.vertices().begin()));
  }
  return out;
}

}  // namespace tilerot
