#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/form.hpp"
#include "tilerot/map.hpp"
#include "tilerot/system.hpp"

namespace tilerot {

/// Shape change by a positive sPE form: every collared tile t gets length
/// w_t = int_t mu, and a vertex x moves to int_0^x mu.
template <Scalar S>
struct ShapeChange {
  std::string source;
  SpeForm<S> form;
  std::vector<std::string> labels;  // target letters, one per collared label
  std::vector<S> lengths;
  // Tiling system of the target space. Absent for fusion rules with a
  // collared form, where the target needs contexts across supertile
  // boundaries; windows and maps still transport.
  std::optional<TilingSystem> target;
  // target level n grows the same patch as source level n + seed_level
  int seed_level = 0;
  std::string note;
};

namespace detail {

inline std::string collared_name(const TilingSystem& sys, const CollaredAlphabet& alpha, int k) {
  if (alpha.depth() == 0) return sys.alphabet[static_cast<std::size_t>(alpha.bare(k))];
  std::string s = alpha.describe(sys, k);
  std::replace(s.begin(), s.end(), ' ', '_');
  return s;
}

/// Substitution on collared letters induced by `sys`: the image of a
/// collared letter is the run of collared letters read off the substituted
/// context.
inline SubstitutionRule collared_substitution(const TilingSystem& sys, const CollaredAlphabet& alpha) {
  const auto d = static_cast<std::size_t>(alpha.depth());
  const auto& sub = sys.substitution();
  SubstitutionRule out;
  for (const auto& key : alpha.keys()) {
    Word image, left;
    for (std::size_t i = 0; i < key.size(); ++i) {
      const Word& piece = sub.images[static_cast<unsigned char>(key[i])];
      if (i < d) left += piece;
      image += piece;
    }
    const std::size_t from = left.size();
    const std::size_t len = sub.images[static_cast<unsigned char>(key[d])].size();
    Word collared;
    for (std::size_t p = from; p < from + len; ++p) {
      int k = alpha.find(image.substr(p - d, 2 * d + 1));
      if (k < 0) throw std::logic_error("collared substitution: context missing from the collared alphabet");
      collared.push_back(static_cast<char>(k));
    }
    out.images.push_back(std::move(collared));
  }
  return out;
}

}  // namespace detail

template <Scalar S>
ShapeChange<S> shape_change(const TilingSystem& sys, const SpeForm<S>& form) {
  if (!form.positive())
    throw std::invalid_argument("shape change needs a strictly positive form (sign-changing forms are not supported)");
  const auto& alpha = form.alphabet();
  if (alpha.size() > 255) throw std::invalid_argument("shape change: too many collared labels");
  ShapeChange<S> sc;
  sc.source = sys.name;
  sc.form = form;
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    sc.labels.push_back(detail::collared_name(sys, alpha, static_cast<int>(k)));
    sc.lengths.push_back(form.weight(static_cast<int>(k)));
  }
  TilingSystem t = sys;
  t.name = sys.name + "_shape_" + form.name();
  t.alphabet = sc.labels;
  t.lengths.clear();
  t.exact_lengths.clear();
  for (const auto& w : sc.lengths) {
    t.lengths.push_back(to_double(w));
    if constexpr (ScalarTraits<S>::exact) {
      t.exact_lengths.emplace_back(w);
    } else {
      t.exact_lengths.emplace_back(std::nullopt);
    }
  }
  t.mode = ScalarTraits<S>::exact ? ScalarMode::exact : ScalarMode::floating;
  if (alpha.depth() == 0) {
    t.validate();
    sc.target = std::move(t);
    return sc;
  }
  if (sys.is_fusion()) {
    sc.note = "fusion rule with a collared form: target system not built, windows transported only";
    return sc;
  }
  t.rule = detail::collared_substitution(sys, alpha);
  // seed: the collared labels around the origin of a source window
  int level = 1;
  TilingWindow<double> w;
  for (;; ++level) {
    w = build_window<double>(sys, level, sys.seed);
    const auto d = static_cast<std::size_t>(alpha.depth());
    const auto o = w.origin_index();
    if (sys.seed.left.empty() ? 2 * d < w.tile_count() : o >= d + 1 && o + d < w.tile_count()) break;
    if (level > max_expansion_level()) throw std::runtime_error("shape change: cannot collar the seed");
  }
  auto keys = collared_labels(w, alpha);
  auto o = w.origin_index();
  if (sys.seed.left.empty()) {
    t.seed = Seed{{}, sc.labels[static_cast<std::size_t>(keys[static_cast<std::size_t>(alpha.depth())])]};
  } else {
    t.seed = Seed{sc.labels[static_cast<std::size_t>(keys[o - 1])], sc.labels[static_cast<std::size_t>(keys[o])]};
  }
  sc.seed_level = level;
  t.validate();
  sc.target = std::move(t);
  return sc;
}

/// The window's collared part moved to the target coordinates: tile i of the
/// result is collared tile first_tile()+i of the source, labelled by its
/// collared label, with vertices at the running integral of mu.
template <Scalar S>
TilingWindow<S> transport_window(const BoundForm<S>& mu) {
  const auto& w = mu.window();
  Word labels;
  std::vector<S> v;
  for (std::size_t i = mu.first_tile(); i < mu.last_tile(); ++i) {
    if (mu.key(i) > 255) throw std::invalid_argument("transport_window: too many collared labels");
    labels.push_back(static_cast<char>(mu.key(i)));
  }
  for (std::size_t i = mu.first_tile(); i <= mu.last_tile(); ++i) v.push_back(mu.prefix(i));
  std::size_t origin = std::clamp(w.origin_index(), mu.first_tile(), mu.last_tile()) - mu.first_tile();
  auto prov = w.provenance();
  prov.system += "_shape_" + mu.form().name();
  return TilingWindow<S>(std::move(labels), std::move(v), origin, w.tolerance(), prov);
}

/// T o f o T^{-1} with T(x) = int_0^x mu. `map` and `mu` must outlive the
/// result; `target` should be transport_window(mu).
template <Scalar S>
FunctionMap<S> transport_map(const SpeMap<S>& map, const BoundForm<S>& mu, const TilingWindow<S>& target) {
  typename FunctionMap<S>::Fn fwd = [&map, &mu](const S& y) { return mu.cumulative(map.apply(mu.inverse(y))); };
  typename FunctionMap<S>::Fn back;
  if (map.invertible())
    back = [&map, &mu](const S& y) {
      std::size_t h = 0;
      return mu.cumulative(map.apply_inverse(mu.inverse(y), h));
    };
  double stretch = std::max(1.0, mu.form().max_density());
  double r = (map.radius() + mu.form().radius()) * stretch;
  return FunctionMap<S>(target, std::move(fwd), std::move(back), r, map.fixed_point_free(),
                        "transported:" + map.describe() + "/" + mu.form().name());
}

}  // namespace tilerot
