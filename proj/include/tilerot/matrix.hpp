#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tilerot/system.hpp"

namespace tilerot {

/// Integer matrix, row-major. Column j describes the image of letter j:
/// M[i][j] = number of letters i in rule(j).
using IntMatrix = std::vector<std::vector<long long>>;

inline IntMatrix substitution_matrix(const TilingSystem& sys) {
  if (sys.is_fusion())
    throw std::invalid_argument("fusion systems have level-dependent matrices; use fusion_transition_matrices");
  const std::size_t n = sys.size();
  IntMatrix m(n, std::vector<long long>(n, 0));
  for (std::size_t j = 0; j < n; ++j)
    for (char c : sys.substitution().images[j]) ++m[static_cast<unsigned char>(c)][j];
  return m;
}

/// Per-level transition matrices of a fusion rule, same column convention:
/// entry [i][k] of the level-l matrix counts level-(l-1) kind i inside
/// level-l kind k. Keyed by l.
inline std::map<int, IntMatrix> fusion_transition_matrices(const TilingSystem& sys) {
  const auto& f = sys.fusion();
  const std::size_t n = f.kind_names.size();
  std::map<int, IntMatrix> out;
  for (int l = f.base_level + 1; l <= f.top_scheduled_level(); ++l) {
    IntMatrix m(n, std::vector<long long>(n, 0));
    for (std::size_t k = 0; k < n; ++k)
      for (const auto& b : f.pattern[k])
        for (int sub : b.kinds) m[static_cast<std::size_t>(sub)][k] += static_cast<long long>(f.count(b, l));
    out[l] = std::move(m);
  }
  return out;
}

enum class SpectralClass { pisot, expansive, neutral };

inline std::string to_string(SpectralClass c) {
  switch (c) {
    case SpectralClass::pisot: return "pisot";
    case SpectralClass::expansive: return "expansive";
    case SpectralClass::neutral: return "neutral";
  }
  return "?";
}

struct EigenAnalysis {
  std::vector<std::complex<double>> eigenvalues;  // sorted by modulus, largest first
  double perron = 0;
  std::vector<double> perron_vector;  // right eigenvector, entries sum to 1
  bool pisot = false;
  SpectralClass classification = SpectralClass::neutral;
};

/// Pisot iff every eigenvalue other than the Perron one has modulus < 1;
/// expansive when some other eigenvalue has modulus > 1.
inline EigenAnalysis eigen_analysis(const IntMatrix& m) {
  const auto n = static_cast<Eigen::Index>(m.size());
  if (n == 0) throw std::invalid_argument("empty matrix");
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(m[static_cast<std::size_t>(i)].size()) != n) throw std::invalid_argument("matrix must be square");
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = static_cast<double>(m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigen decomposition failed");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  const auto& ev = solver.eigenvalues();
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
    if (std::abs(ev(x)) != std::abs(ev(y))) return std::abs(ev(x)) > std::abs(ev(y));
    return ev(x).real() > ev(y).real();
  });
  EigenAnalysis out;
  for (auto i : order) out.eigenvalues.push_back(ev(i));
  const auto top = order.front();
  out.perron = ev(top).real();
  Eigen::VectorXd v = solver.eigenvectors().col(top).real();
  double sum = v.sum();
  if (sum == 0) throw std::runtime_error("degenerate Perron vector");
  for (Eigen::Index i = 0; i < n; ++i) out.perron_vector.push_back(v(i) / sum);
  bool any_big = false, all_small = true;
  for (std::size_t i = 1; i < out.eigenvalues.size(); ++i) {
    double r = std::abs(out.eigenvalues[i]);
    if (r >= 1) all_small = false;
    if (r > 1) any_big = true;
  }
  out.pisot = all_small;
  out.classification = all_small ? SpectralClass::pisot : any_big ? SpectralClass::expansive : SpectralClass::neutral;
  return out;
}

namespace detail {

inline bool is_primitive(const IntMatrix& m) {
  const std::size_t n = m.size();
  // Wielandt bound: primitive iff M^k > 0 for k = (n-1)^2 + 1
  std::vector<std::vector<bool>> p(n, std::vector<bool>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p[i][j] = m[i][j] > 0;
  auto cur = p;
  const std::size_t k = (n - 1) * (n - 1) + 1;
  for (std::size_t step = 1; step < k; ++step) {
    std::vector<std::vector<bool>> next(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < n; ++l)
        if (cur[i][l])
          for (std::size_t j = 0; j < n; ++j) next[i][j] = next[i][j] || p[l][j];
    cur = std::move(next);
  }
  for (const auto& row : cur)
    for (bool b : row)
      if (!b) return false;
  return true;
}

}  // namespace detail

/// Letter frequencies. Substitutions: normalized Perron vector. Fusion:
/// letter counts of the declared branch kind at `level` (default: top
/// scheduled level).
inline std::vector<double> letter_frequencies(const TilingSystem& sys, int level = -1) {
  if (!sys.is_fusion()) {
    auto m = substitution_matrix(sys);
    if (!detail::is_primitive(m)) throw std::invalid_argument("letter frequencies need a primitive substitution");
    return eigen_analysis(m).perron_vector;
  }
  const auto& f = sys.fusion();
  std::string branch = sys.ergodic_branch;
  if (branch.empty()) {
    if (!sys.uniquely_ergodic)
      throw std::invalid_argument("non-uniquely-ergodic fusion system needs a declared ergodic branch");
    branch = f.kind_names.front();
  }
  auto kind = sys.find_kind(branch);
  if (!kind) throw std::invalid_argument("unknown ergodic branch '" + branch + "'");
  if (level < 0) level = f.top_scheduled_level();
  auto counts = unit_letter_counts(sys, level)[static_cast<std::size_t>(*kind)];
  double total = 0;
  for (double c : counts) total += c;
  for (double& c : counts) c /= total;
  return counts;
}

}  // namespace tilerot
