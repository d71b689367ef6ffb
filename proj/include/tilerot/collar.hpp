#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/system.hpp"
#include "tilerot/window.hpp"

namespace tilerot {

/// Tiles labelled by their depth-k context. A collared label is stored as the
/// word x_{-k} .. x_0 .. x_k of letter indices; the bare label is the middle.
class CollaredAlphabet {
 public:
  CollaredAlphabet() = default;
  CollaredAlphabet(int depth, std::set<Word> keys) : depth_(depth), keys_(keys.begin(), keys.end()) {
    for (std::size_t i = 0; i < keys_.size(); ++i) index_[keys_[i]] = static_cast<int>(i);
  }

  int depth() const { return depth_; }
  std::size_t size() const { return keys_.size(); }
  const std::vector<Word>& keys() const { return keys_; }
  const Word& key(int i) const { return keys_.at(static_cast<std::size_t>(i)); }
  int bare(int i) const { return static_cast<unsigned char>(keys_.at(static_cast<std::size_t>(i))[static_cast<std::size_t>(depth_)]); }

  int find(const Word& key) const {
    auto it = index_.find(key);
    return it == index_.end() ? -1 : it->second;
  }
  bool contains(const Word& key) const { return index_.count(key) > 0; }

  /// Human-readable "(ctx)x(ctx)" form.
  std::string describe(const TilingSystem& sys, int i) const {
    const Word& k = key(i);
    auto d = static_cast<std::size_t>(depth_);
    return "(" + sys.spell(k.substr(0, d)) + ")" + sys.spell(k.substr(d, 1)) + "(" + sys.spell(k.substr(d + 1)) + ")";
  }

 private:
  int depth_ = 0;
  std::vector<Word> keys_;
  std::map<Word, int> index_;
};

namespace detail {

// Factor set of one hierarchical unit, plus enough of its ends to read off
// factors straddling a junction with a neighbour.
struct FactorSketch {
  std::set<Word> factors;
  Word prefix;
  Word suffix;
};

inline void add_factors(std::set<Word>& out, const Word& w, std::size_t m) {
  for (std::size_t i = 0; i + m <= w.size(); ++i) out.insert(w.substr(i, m));
}

inline FactorSketch sketch_of(const Word& w, std::size_t m) {
  FactorSketch s;
  add_factors(s.factors, w, m);
  s.prefix = w.substr(0, std::min(w.size(), m - 1));
  s.suffix = w.size() >= m - 1 ? w.substr(w.size() - (m - 1)) : w;
  return s;
}

inline void add_junction(std::set<Word>& out, const FactorSketch& l, const FactorSketch& r, std::size_t m) {
  add_factors(out, l.suffix + r.prefix, m);
}

// Lower-level units making up `unit` at `level`, repetition counts capped at
// two (enough to expose every junction type).
inline std::vector<int> composition(const TilingSystem& sys, int unit, int level) {
  std::vector<int> seq;
  if (!sys.is_fusion()) {
    for (char c : sys.substitution().images[static_cast<std::size_t>(unit)]) seq.push_back(static_cast<unsigned char>(c));
    return seq;
  }
  const auto& f = sys.fusion();
  for (const auto& b : f.pattern[static_cast<std::size_t>(unit)]) {
    std::uint64_t times = std::min<std::uint64_t>(f.count(b, level), 2);
    for (std::uint64_t t = 0; t < times; ++t) seq.insert(seq.end(), b.kinds.begin(), b.kinds.end());
  }
  return seq;
}

inline std::size_t unit_count(const TilingSystem& sys) {
  return sys.is_fusion() ? sys.fusion().kind_names.size() : sys.size();
}

inline std::set<UnitPair> unit_pairs(const TilingSystem& sys, int level) {
  return sys.is_fusion() ? legal_kind_pairs(sys, level) : legal_letter_pairs(sys);
}

inline Word expand_unit_index(const TilingSystem& sys, int unit, int level) {
  return sys.is_fusion() ? expand_kind(sys, unit, level) : expand_supertile(sys, sys.alphabet[static_cast<std::size_t>(unit)], level);
}

// Length-m factors of legal tilings read at supertile level `level`.
inline std::set<Word> factors_at(const std::vector<FactorSketch>& units, const std::set<UnitPair>& pairs,
                                 std::size_t m) {
  std::set<Word> out;
  for (const auto& u : units) out.insert(u.factors.begin(), u.factors.end());
  for (auto [x, y] : pairs) add_junction(out, units[static_cast<std::size_t>(x)], units[static_cast<std::size_t>(y)], m);
  return out;
}

}  // namespace detail

/// Length-m factors occurring in legal tilings, computed at two successive
/// supertile levels and required to agree. `level_used` receives the lower
/// of the two levels.
inline std::set<Word> legal_factors(const TilingSystem& sys, std::size_t m, int* level_used = nullptr) {
  if (m == 0) throw std::invalid_argument("factor length must be positive");
  const std::size_t units = detail::unit_count(sys);
  const int first = sys.is_fusion() ? sys.fusion().base_level : 0;
  const int cap = sys.is_fusion() ? std::min(max_expansion_level(), sys.fusion().top_scheduled_level())
                                  : max_expansion_level();
  // smallest level whose units are all at least m letters long
  int level = first;
  for (;; ++level) {
    if (level >= cap) throw std::runtime_error("collar: supertiles never reach length " + std::to_string(m) +
                                               " within level cap " + std::to_string(cap));
    auto counts = unit_letter_counts(sys, level);
    double shortest = 1e300;
    for (std::size_t u = 0; u < units; ++u) {
      double total = 0;
      for (double c : counts[u]) total += c;
      shortest = std::min(shortest, total);
    }
    if (shortest >= static_cast<double>(m)) break;
  }
  std::vector<detail::FactorSketch> cur(units);
  for (std::size_t u = 0; u < units; ++u)
    cur[u] = detail::sketch_of(detail::expand_unit_index(sys, static_cast<int>(u), level), m);
  std::set<Word> prev = detail::factors_at(cur, detail::unit_pairs(sys, level), m);
  for (int next = level + 1; next <= cap; ++next) {
    std::vector<detail::FactorSketch> up(units);
    for (std::size_t u = 0; u < units; ++u) {
      auto seq = detail::composition(sys, static_cast<int>(u), next);
      auto& s = up[u];
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const auto& part = cur[static_cast<std::size_t>(seq[i])];
        s.factors.insert(part.factors.begin(), part.factors.end());
        if (i + 1 < seq.size()) detail::add_junction(s.factors, part, cur[static_cast<std::size_t>(seq[i + 1])], m);
      }
      s.prefix = cur[static_cast<std::size_t>(seq.front())].prefix;
      s.suffix = cur[static_cast<std::size_t>(seq.back())].suffix;
    }
    std::set<Word> now = detail::factors_at(up, detail::unit_pairs(sys, next), m);
    if (now == prev) {
      if (level_used) *level_used = next - 1;
      return now;
    }
    prev = std::move(now);
    cur = std::move(up);
  }
  throw std::runtime_error("collar: factor set did not stabilize by level " + std::to_string(cap));
}

inline CollaredAlphabet collar(const TilingSystem& sys, int depth) {
  if (depth < 0) throw std::invalid_argument("collar depth must be >= 0");
  if (depth == 0) {
    std::set<Word> keys;
    for (std::size_t i = 0; i < sys.size(); ++i) keys.insert(Word(1, static_cast<char>(i)));
    return {0, std::move(keys)};
  }
  return {depth, legal_factors(sys, static_cast<std::size_t>(2 * depth + 1))};
}

/// Collared label index of every tile of `w`; -1 where the context runs off
/// the window, or where the context is not in `alphabet` (which means the
/// window is not a legal factor).
template <Scalar S>
std::vector<int> collared_labels(const TilingWindow<S>& w, const CollaredAlphabet& alphabet) {
  const auto d = static_cast<std::size_t>(alphabet.depth());
  const auto n = w.tile_count();
  std::vector<int> out(n, -1);
  for (std::size_t i = d; i + d < n; ++i) out[i] = alphabet.find(w.labels().substr(i - d, 2 * d + 1));
  return out;
}

}  // namespace tilerot
