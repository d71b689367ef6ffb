#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "tilerot/quadratic.hpp"
#include "tilerot/scalar.hpp"

namespace tilerot {

/// A word over a tiling alphabet: each char holds a letter *index*, not a
/// printable label. Use TilingSystem::spell() to render it.
using Word = std::string;

/// Hard cap on the number of letters a single expansion may produce.
inline constexpr std::size_t kMaxExpansionLetters = std::size_t{1} << 26;

/// Depth cap for supertile expansion. Honours the TILING_MAX_LEVEL
/// environment variable, default 32.
inline int max_expansion_level() {
  if (const char* env = std::getenv("TILING_MAX_LEVEL")) {
    try {
      int v = std::stoi(env);
      if (v >= 0) return v;
    } catch (const std::exception&) {
    }
  }
  return 32;
}

struct SubstitutionRule {
  std::vector<Word> images;  // images[letter]
};

/// One repeated group inside a fusion composition: `kinds` concatenated,
/// repeated either a fixed number of times or n_j times (n_j from the
/// per-level schedule).
struct FusionBlock {
  std::vector<int> kinds;
  bool scheduled = false;
  std::uint64_t fixed = 1;
};

/// Level-dependent hierarchical rule. Kinds (e.g. A, B) are given as letter
/// words at `base_level`; above it each kind is a sequence of blocks over the
/// previous level's kinds.
struct FusionRule {
  std::vector<std::string> kind_names;
  int base_level = 1;
  std::vector<Word> base;                         // per kind
  std::vector<std::vector<FusionBlock>> pattern;  // per kind
  std::vector<std::uint64_t> schedule;            // n_j for j = base_level+1, ...
  int adjacency_levels = 6;                       // levels analysed for legal neighbours

  int top_scheduled_level() const { return base_level + static_cast<int>(schedule.size()); }

  bool has_schedule(int level) const { return level > base_level && level <= top_scheduled_level(); }

  std::uint64_t count(const FusionBlock& b, int level) const {
    if (!b.scheduled) return b.fixed;
    if (!has_schedule(level)) {
      throw std::out_of_range("fusion level " + std::to_string(level) + " exceeds declared n_j schedule (top level " +
                              std::to_string(top_scheduled_level()) + ")");
    }
    return schedule[static_cast<std::size_t>(level - base_level - 1)];
  }
};

/// Seed for growing a window: a single unit, or two units `left|right` with
/// the origin at their junction.
struct Seed {
  std::string left;  // empty for one-sided seeds
  std::string right;

  static Seed parse(std::string_view text) {
    Seed s;
    auto bar = text.find('|');
    if (bar == std::string_view::npos) bar = text.find('.');
    if (bar == std::string_view::npos) {
      s.right = std::string(text);
    } else {
      s.left = std::string(text.substr(0, bar));
      s.right = std::string(text.substr(bar + 1));
    }
    if (s.right.empty()) throw std::invalid_argument("empty seed");
    return s;
  }
  std::string str() const { return left.empty() ? right : left + "|" + right; }
};

class TilingSystem {
 public:
  std::string name = "system";
  std::vector<std::string> alphabet;
  std::vector<std::optional<QuadraticNumber>> exact_lengths;  // empty when not quadratic
  std::vector<double> lengths;
  std::variant<SubstitutionRule, FusionRule> rule;
  ScalarMode mode = ScalarMode::floating;
  double tolerance = kDefaultTolerance;
  Seed seed{{}, {}};
  // Fusion systems that are minimal but not uniquely ergodic must name the
  // generic branch (a kind) used for frequencies.
  bool uniquely_ergodic = true;
  std::string ergodic_branch;

  std::size_t size() const { return alphabet.size(); }
  bool is_fusion() const { return std::holds_alternative<FusionRule>(rule); }
  const SubstitutionRule& substitution() const { return std::get<SubstitutionRule>(rule); }
  const FusionRule& fusion() const { return std::get<FusionRule>(rule); }

  int letter(std::string_view label) const {
    for (std::size_t i = 0; i < alphabet.size(); ++i)
      if (alphabet[i] == label) return static_cast<int>(i);
    throw std::invalid_argument("unknown label '" + std::string(label) + "'");
  }
  std::optional<int> find_letter(std::string_view label) const {
    for (std::size_t i = 0; i < alphabet.size(); ++i)
      if (alphabet[i] == label) return static_cast<int>(i);
    return std::nullopt;
  }
  std::optional<int> find_kind(std::string_view name_) const {
    if (!is_fusion()) return std::nullopt;
    const auto& k = fusion().kind_names;
    for (std::size_t i = 0; i < k.size(); ++i)
      if (k[i] == name_) return static_cast<int>(i);
    return std::nullopt;
  }

  template <Scalar S>
  S length(int letter_index) const {
    auto i = static_cast<std::size_t>(letter_index);
    if constexpr (ScalarTraits<S>::exact) {
      if (!exact_lengths.at(i)) throw std::domain_error("length of '" + alphabet[i] + "' is not exact-quadratic");
      return *exact_lengths[i];
    } else {
      return lengths.at(i);
    }
  }

  bool all_lengths_exact() const {
    return std::all_of(exact_lengths.begin(), exact_lengths.end(), [](const auto& q) { return q.has_value(); });
  }

  std::string spell(const Word& w) const {
    std::string out;
    bool single = std::all_of(alphabet.begin(), alphabet.end(), [](const std::string& s) { return s.size() == 1; });
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (!single && i > 0) out += ' ';
      out += alphabet.at(static_cast<unsigned char>(w[i]));
    }
    return out;
  }
  Word parse_word(std::string_view text) const {
    Word w;
    bool single = std::all_of(alphabet.begin(), alphabet.end(), [](const std::string& s) { return s.size() == 1; });
    if (single) {
      for (char c : text)
        if (c != ' ') w.push_back(static_cast<char>(letter(std::string_view(&c, 1))));
      return w;
    }
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto next = text.find(' ', pos);
      if (next == std::string_view::npos) next = text.size();
      if (next > pos) w.push_back(static_cast<char>(letter(text.substr(pos, next - pos))));
      pos = next + 1;
    }
    return w;
  }

  /// Structural checks: positive lengths, images over the alphabet, fusion
  /// compositions referencing declared kinds.
  void validate() const;
};

inline void TilingSystem::validate() const {
  if (alphabet.empty()) throw std::invalid_argument("empty alphabet");
  if (alphabet.size() > 255) throw std::invalid_argument("alphabet larger than 255 labels");
  if (lengths.size() != alphabet.size() || exact_lengths.size() != alphabet.size())
    throw std::invalid_argument("one length per label required");
  for (std::size_t i = 0; i < lengths.size(); ++i)
    if (!(lengths[i] > 0)) throw std::invalid_argument("length of '" + alphabet[i] + "' must be positive");
  if (tolerance <= 0) throw std::invalid_argument("tolerance must be positive");
  auto check_word = [&](const Word& w) {
    if (w.empty()) throw std::invalid_argument("empty rule image");
    for (char c : w)
      if (static_cast<unsigned char>(c) >= alphabet.size()) throw std::invalid_argument("rule uses unknown letter");
  };
  if (!is_fusion()) {
    const auto& s = substitution();
    if (s.images.size() != alphabet.size()) throw std::invalid_argument("substitution needs one image per label");
    for (const auto& w : s.images) check_word(w);
  } else {
    const auto& f = fusion();
    if (f.kind_names.empty()) throw std::invalid_argument("fusion rule without kinds");
    if (f.base.size() != f.kind_names.size() || f.pattern.size() != f.kind_names.size())
      throw std::invalid_argument("fusion rule: base/pattern per kind required");
    for (const auto& w : f.base) check_word(w);
    for (const auto& blocks : f.pattern) {
      if (blocks.empty()) throw std::invalid_argument("fusion rule: empty composition");
      for (const auto& b : blocks) {
        if (b.kinds.empty()) throw std::invalid_argument("fusion rule: empty block");
        for (int k : b.kinds)
          if (k < 0 || static_cast<std::size_t>(k) >= f.kind_names.size())
            throw std::invalid_argument("fusion rule: block references unknown kind");
      }
    }
    if (!uniquely_ergodic && !ergodic_branch.empty() && !find_kind(ergodic_branch))
      throw std::invalid_argument("ergodic branch must name a kind");
  }
}

// ---------------------------------------------------------------------------
// Expansion

namespace detail {

inline void check_expansion_level(int level) {
  if (level < 0) throw std::invalid_argument("level must be >= 0");
  if (level > max_expansion_level())
    throw std::out_of_range("level " + std::to_string(level) + " exceeds TILING_MAX_LEVEL cap " +
                            std::to_string(max_expansion_level()));
}

inline void append_checked(Word& out, const Word& piece, std::uint64_t times) {
  if (out.size() + piece.size() * times > kMaxExpansionLetters)
    throw std::length_error("expansion exceeds " + std::to_string(kMaxExpansionLetters) + " letters");
  for (std::uint64_t t = 0; t < times; ++t) out += piece;
}

inline Word substitute(const SubstitutionRule& rule, const Word& w) {
  Word out;
  for (char c : w) append_checked(out, rule.images[static_cast<unsigned char>(c)], 1);
  return out;
}

}  // namespace detail

/// Letters of kind `kind` at `level` of a fusion rule.
inline Word expand_kind(const TilingSystem& sys, int kind, int level) {
  const auto& f = sys.fusion();
  detail::check_expansion_level(level);
  if (level < f.base_level)
    throw std::out_of_range("kind " + f.kind_names.at(static_cast<std::size_t>(kind)) + " is defined from level " +
                            std::to_string(f.base_level));
  std::vector<Word> cur = f.base;
  for (int l = f.base_level + 1; l <= level; ++l) {
    std::vector<Word> next(cur.size());
    for (std::size_t k = 0; k < cur.size(); ++k) {
      for (const auto& block : f.pattern[k]) {
        Word unit;
        for (int sub : block.kinds) unit += cur[static_cast<std::size_t>(sub)];
        detail::append_checked(next[k], unit, f.count(block, l));
      }
    }
    cur = std::move(next);
  }
  return cur.at(static_cast<std::size_t>(kind));
}

/// Level-`level` supertile of `name`: a label (level-0 identity; substitution
/// power for substitution systems) or a fusion kind.
inline Word expand_supertile(const TilingSystem& sys, std::string_view name, int level) {
  detail::check_expansion_level(level);
  if (auto letter = sys.find_letter(name)) {
    if (level == 0) return Word(1, static_cast<char>(*letter));
    if (sys.is_fusion())
      throw std::invalid_argument("label '" + std::string(name) + "' has no level-" + std::to_string(level) +
                                  " supertile in a fusion system; use a kind name");
    Word w(1, static_cast<char>(*letter));
    for (int l = 0; l < level; ++l) w = detail::substitute(sys.substitution(), w);
    return w;
  }
  if (auto kind = sys.find_kind(name)) return expand_kind(sys, *kind, level);
  throw std::invalid_argument("unknown label '" + std::string(name) + "'");
}

/// Letter counts of every unit at one level without expanding (doubles, so
/// high fusion levels do not overflow). Rows: units; columns: letters.
inline std::vector<std::vector<double>> unit_letter_counts(const TilingSystem& sys, int level) {
  const std::size_t n = sys.size();
  if (!sys.is_fusion()) {
    std::vector<std::vector<double>> counts(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) counts[i][i] = 1.0;
    for (int l = 0; l < level; ++l) {
      std::vector<std::vector<double>> next(n, std::vector<double>(n, 0.0));
      for (std::size_t x = 0; x < n; ++x)
        for (char c : sys.substitution().images[x])
          for (std::size_t j = 0; j < n; ++j) next[x][j] += counts[static_cast<unsigned char>(c)][j];
      counts = std::move(next);
    }
    return counts;
  }
  const auto& f = sys.fusion();
  std::vector<std::vector<double>> counts(f.kind_names.size(), std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < f.base.size(); ++k)
    for (char c : f.base[k]) counts[k][static_cast<unsigned char>(c)] += 1.0;
  for (int l = f.base_level + 1; l <= level; ++l) {
    auto next = counts;
    for (auto& row : next) std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t k = 0; k < f.pattern.size(); ++k)
      for (const auto& b : f.pattern[k]) {
        double times = static_cast<double>(f.count(b, l));
        for (int sub : b.kinds)
          for (std::size_t j = 0; j < n; ++j) next[k][j] += times * counts[static_cast<std::size_t>(sub)][j];
      }
    counts = std::move(next);
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Legal neighbours

using UnitPair = std::pair<int, int>;

namespace detail {

inline int first_unit(const FusionRule& f, int kind, int level_above) {
  (void)level_above;
  return f.pattern[static_cast<std::size_t>(kind)].front().kinds.front();
}
inline int last_unit(const FusionRule& f, int kind, int level_above) {
  (void)level_above;
  return f.pattern[static_cast<std::size_t>(kind)].back().kinds.back();
}

// Adjacent pairs of level-(l-1) kinds occurring inside level-l compositions.
// Counts only matter through "repeated at least twice", so levels beyond the
// declared schedule use 2.
inline std::set<UnitPair> internal_pairs(const FusionRule& f, int level) {
  std::set<UnitPair> out;
  for (const auto& blocks : f.pattern) {
    std::vector<int> seq;
    for (const auto& b : blocks) {
      std::uint64_t times = b.scheduled ? (f.has_schedule(level) ? f.count(b, level) : 2) : b.fixed;
      times = std::min<std::uint64_t>(times, 2);
      for (std::uint64_t t = 0; t < times; ++t) seq.insert(seq.end(), b.kinds.begin(), b.kinds.end());
    }
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) out.insert({seq[i], seq[i + 1]});
  }
  return out;
}

}  // namespace detail

/// Pairs (x, y) of letters that occur adjacently in legal tilings.
inline std::set<UnitPair> legal_letter_pairs(const TilingSystem& sys);

/// Pairs (X, Y) of fusion kinds occurring adjacently at `level`
/// (level >= base_level). Pairs are read off compositions up to
/// max(adjacency_levels, top scheduled level + 2); levels past the schedule
/// only matter through "repeated at least twice".
inline std::set<UnitPair> legal_kind_pairs(const TilingSystem& sys, int level) {
  const auto& f = sys.fusion();
  const int top = std::max(f.adjacency_levels, f.top_scheduled_level() + 2);
  if (level < f.base_level) throw std::invalid_argument("kind pairs requested below the base level");
  std::set<UnitPair> pairs;
  for (int l = top; l > level; --l) {
    std::set<UnitPair> below = detail::internal_pairs(f, l);
    for (auto [x, y] : pairs) below.insert({detail::last_unit(f, x, l), detail::first_unit(f, y, l)});
    pairs = std::move(below);
  }
  return pairs;
}

inline std::set<UnitPair> legal_letter_pairs(const TilingSystem& sys) {
  std::set<UnitPair> pairs;
  if (!sys.is_fusion()) {
    const auto& s = sys.substitution();
    for (const auto& img : s.images)
      for (std::size_t i = 0; i + 1 < img.size(); ++i)
        pairs.insert({static_cast<unsigned char>(img[i]), static_cast<unsigned char>(img[i + 1])});
    bool grew = true;
    while (grew) {
      grew = false;
      auto snapshot = pairs;
      for (auto [x, y] : snapshot) {
        const auto& ix = s.images[static_cast<std::size_t>(x)];
        const auto& iy = s.images[static_cast<std::size_t>(y)];
        UnitPair p{static_cast<unsigned char>(ix.back()), static_cast<unsigned char>(iy.front())};
        grew |= pairs.insert(p).second;
      }
    }
    return pairs;
  }
  const auto& f = sys.fusion();
  for (const auto& w : f.base)
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
      pairs.insert({static_cast<unsigned char>(w[i]), static_cast<unsigned char>(w[i + 1])});
  for (auto [x, y] : legal_kind_pairs(sys, f.base_level))
    pairs.insert({static_cast<unsigned char>(f.base[static_cast<std::size_t>(x)].back()),
                  static_cast<unsigned char>(f.base[static_cast<std::size_t>(y)].front())});
  return pairs;
}

/// A unit resolved at a level: a fusion kind, or a letter.
struct Unit {
  int index = 0;
  bool is_kind = false;
};

inline Unit resolve_unit(const TilingSystem& sys, std::string_view name, int level) {
  if (auto k = sys.find_kind(name)) {
    if (level < sys.fusion().base_level)
      throw std::invalid_argument("kind '" + std::string(name) + "' is not defined below level " +
                                  std::to_string(sys.fusion().base_level));
    return {*k, true};
  }
  if (auto l = sys.find_letter(name)) {
    if (sys.is_fusion() && level != 0)
      throw std::invalid_argument("label '" + std::string(name) + "' used as a level-" + std::to_string(level) +
                                  " unit in a fusion system");
    return {*l, false};
  }
  throw std::invalid_argument("unknown label '" + std::string(name) + "'");
}

/// Letters of a resolved unit at `level`.
inline Word expand_unit(const TilingSystem& sys, Unit u, int level) {
  if (u.is_kind) return expand_kind(sys, u.index, level);
  return expand_supertile(sys, sys.alphabet.at(static_cast<std::size_t>(u.index)), level);
}

/// True when unit `left` may be followed by unit `right` at `level`.
inline bool is_legal_pair(const TilingSystem& sys, std::string_view left, std::string_view right, int level) {
  Unit l = resolve_unit(sys, left, level);
  Unit r = resolve_unit(sys, right, level);
  if (l.is_kind != r.is_kind) return false;
  if (l.is_kind) return legal_kind_pairs(sys, level).count({l.index, r.index}) > 0;
  // letter units: for substitution systems s^level preserves legality of pairs
  return legal_letter_pairs(sys).count({l.index, r.index}) > 0;
}

}  // namespace tilerot
