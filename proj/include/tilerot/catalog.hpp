#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tilerot/quadratic.hpp"
#include "tilerot/system.hpp"

namespace tilerot::catalog {

namespace detail {

inline void set_lengths(TilingSystem& sys, const std::vector<std::string>& lengths) {
  sys.exact_lengths.clear();
  sys.lengths.clear();
  for (const auto& text : lengths) {
    auto q = QuadraticNumber::parse(text);
    sys.exact_lengths.emplace_back(q);
    sys.lengths.push_back(q.to_double());
  }
  sys.mode = ScalarMode::exact;
}

inline void set_float_lengths(TilingSystem& sys, const std::vector<double>& lengths) {
  sys.exact_lengths.assign(lengths.size(), std::nullopt);
  sys.lengths = lengths;
  sys.mode = ScalarMode::floating;
}

inline Word w(std::initializer_list<int> letters) {
  Word out;
  for (int l : letters) out.push_back(static_cast<char>(l));
  return out;
}

}  // namespace detail

/// a -> ab, b -> a.
inline TilingSystem fibonacci(const std::string& la = "1", const std::string& lb = "1") {
  TilingSystem s;
  s.name = "fibonacci";
  s.alphabet = {"a", "b"};
  s.rule = SubstitutionRule{{detail::w({0, 1}), detail::w({0})}};
  detail::set_lengths(s, {la, lb});
  s.seed = Seed::parse("a|a");
  s.validate();
  return s;
}

/// a -> ab, b -> aaa.
inline TilingSystem nonpisot(const std::string& la = "1", const std::string& lb = "1") {
  TilingSystem s;
  s.name = "nonpisot";
  s.alphabet = {"a", "b"};
  s.rule = SubstitutionRule{{detail::w({0, 1}), detail::w({0, 0, 0})}};
  detail::set_lengths(s, {la, lb});
  s.seed = Seed::parse("b|a");
  s.validate();
  return s;
}

/// Fibonacci with L_a = 1 + eps, L_b = 1 - phi*eps.
inline TilingSystem multiclass(const std::string& eps = "1/20") {
  auto s = fibonacci("1+" + eps, "1-phi*" + eps);
  s.name = "multiclass";
  return s;
}

/// Fusion on a, b, c: A_1 = ac, B_1 = bc, A_j = (A_{j-1} B_{j-1})^{n_j},
/// B_j = A_{j-1}^{n_j} B_{j-1}^{n_j}. `schedule` lists n_2, n_3, ...
inline TilingSystem fusion_noclass(const std::vector<std::uint64_t>& schedule, double lab = 3.141592653589793) {
  TilingSystem s;
  s.name = "fusion_noclass";
  s.alphabet = {"a", "b", "c"};
  FusionRule f;
  f.kind_names = {"A", "B"};
  f.base_level = 1;
  f.base = {detail::w({0, 2}), detail::w({1, 2})};
  f.pattern = {{FusionBlock{{0, 1}, true, 1}}, {FusionBlock{{0}, true, 1}, FusionBlock{{1}, true, 1}}};
  f.schedule = schedule;
  s.rule = f;
  detail::set_float_lengths(s, {lab, lab, 1.0});
  s.seed = Seed::parse("B|A");
  s.validate();
  return s;
}

/// Fusion on unit tiles a, b: A_n = A_{n-1}^{m_n} B_{n-1},
/// B_n = A_{n-1} B_{n-1}^{m_n} with A_0 = a, B_0 = b. The leading factor of
/// B_n is read as A_{n-1}. Default m_n = 10^n for n = 1..6.
inline TilingSystem nue(std::vector<std::uint64_t> schedule = {10, 100, 1000, 10000, 100000, 1000000}) {
  TilingSystem s;
  s.name = "nue";
  s.alphabet = {"a", "b"};
  FusionRule f;
  f.kind_names = {"A", "B"};
  f.base_level = 0;
  f.base = {detail::w({0}), detail::w({1})};
  f.pattern = {{FusionBlock{{0}, true, 1}, FusionBlock{{1}, false, 1}},
               {FusionBlock{{0}, false, 1}, FusionBlock{{1}, true, 1}}};
  f.schedule = std::move(schedule);
  s.rule = f;
  detail::set_lengths(s, {"1", "1"});
  s.seed = Seed::parse("B|A");
  s.uniquely_ergodic = false;
  s.ergodic_branch = "A";
  s.validate();
  return s;
}

/// Periodic ...ababab...: a -> ab, b -> ab.
inline TilingSystem period_two() {
  TilingSystem s;
  s.name = "period_two";
  s.alphabet = {"a", "b"};
  s.rule = SubstitutionRule{{detail::w({0, 1}), detail::w({0, 1})}};
  detail::set_lengths(s, {"1", "1"});
  s.seed = Seed::parse("b|a");
  s.validate();
  return s;
}

/// a -> a.
inline TilingSystem identity_system() {
  TilingSystem s;
  s.name = "identity";
  s.alphabet = {"a"};
  s.rule = SubstitutionRule{{detail::w({0})}};
  detail::set_lengths(s, {"1"});
  s.seed = Seed::parse("a|a");
  s.validate();
  return s;
}

}  // namespace tilerot::catalog
