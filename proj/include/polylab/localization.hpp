#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include "polylab/env.hpp"
#include "polylab/lattice.hpp"
#include "polylab/walk.hpp"

namespace polylab {

using Pmf = std::map<Vec, double>;

// A^eps = {x : f(x) > eps}; the inequality is strict, boundary atoms are out.
inline std::vector<Vec> atom_set(const Pmf& f, double eps) {
  if (!(eps >= 0) || eps >= 1) throw std::invalid_argument("atom_set: need 0 <= eps < 1");
  std::vector<Vec> out;
  for (const auto& [x, m] : f)
    if (m > eps) out.push_back(x);
  return out;
}

inline double atomic_mass(const Pmf& f, double eps) {
  if (!(eps >= 0) || eps >= 1) throw std::invalid_argument("atomic_mass: need 0 <= eps < 1");
  double s = 0;
  for (const auto& [x, m] : f)
    if (m > eps) s += m;
  return s;
}

inline double max_atom(const Pmf& f) {
  double m = 0;
  for (const auto& [x, p] : f) m = std::max(m, p);
  return m;
}

// Time average (1/n) sum_i rho_i(A_i^{eps_i}).
inline double apa_average(const std::vector<Pmf>& series, const std::vector<double>& eps) {
  if (eps.size() < series.size())
    throw std::invalid_argument("apa_average: schedule shorter than series");
  double s = 0;
  for (std::size_t i = 0; i < series.size(); ++i) s += atomic_mass(series[i], eps[i]);
  return series.empty() ? 0.0 : s / double(series.size());
}

struct GeoResult {
  bool flag;
  double window_mass;
};

namespace detail {

// d = 1: exact two-pointer maximum of mass inside a window of l1-diameter
// at most K over the sorted support.
inline double max_window_mass_1d(const Pmf& f, std::int64_t K) {
  std::vector<std::pair<std::int64_t, double>> pts;
  pts.reserve(f.size());
  for (const auto& [x, m] : f) pts.push_back({x[0], m});
  // Pmf is ordered by Vec, which is lexicographic in x[0] for d = 1.
  double best = 0, cur = 0;
  std::size_t lo = 0;
  for (std::size_t hi = 0; hi < pts.size(); ++hi) {
    cur += pts[hi].second;
    while (pts[hi].first - pts[lo].first > K) cur -= pts[lo++].second;
    best = std::max(best, cur);
  }
  return best;
}

// d >= 2: conservative lower bound via l1-balls of radius floor(K/2)
// centered at candidate support points. May under-report the flag, never
// over-reports. For very large supports only the heaviest sites are tried.
inline double max_window_mass_ball(const Pmf& f, int d, std::int64_t K,
                                   std::size_t center_cap) {
  std::vector<Vec> centers;
  if (f.size() <= center_cap) {
    for (const auto& [x, m] : f) centers.push_back(x);
  } else {
    std::vector<std::pair<double, Vec>> heavy;
    heavy.reserve(f.size());
    for (const auto& [x, m] : f) heavy.push_back({m, x});
    std::nth_element(heavy.begin(), heavy.begin() + long(center_cap), heavy.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    heavy.resize(center_cap);
    for (const auto& [m, x] : heavy) centers.push_back(x);
  }
  std::int64_t r = K / 2;
  double best = 0;
  std::vector<Vec> offsets;
  for (std::int64_t a = -r; a <= r; ++a)
    for (std::int64_t b = (d >= 2 ? -r : 0); b <= (d >= 2 ? r : 0); ++b)
      for (std::int64_t c = (d >= 3 ? -r : 0); c <= (d >= 3 ? r : 0); ++c)
        if (std::abs(a) + std::abs(b) + std::abs(c) <= r)
          offsets.push_back(Vec{std::int32_t(a), std::int32_t(b), std::int32_t(c)});
  for (const Vec& ctr : centers) {
    double s = 0;
    for (const Vec& off : offsets) {
      auto it = f.find(ctr + off);
      if (it != f.end()) s += it->second;
    }
    best = std::max(best, s);
  }
  return best;
}

}  // namespace detail

// Indicator of G_{delta,K}: does some set of l1-diameter at most K carry
// mass greater than 1 - delta? Exact for d = 1; conservative for d >= 2.
inline GeoResult geo_indicator(const Pmf& f, int d, double delta, std::int64_t K,
                               std::size_t center_cap = 4096) {
  if (!(delta > 0) || !(delta < 1)) throw std::invalid_argument("geo_indicator: need 0 < delta < 1");
  if (K < 0) throw std::invalid_argument("geo_indicator: need K >= 0");
  if (f.empty()) return {false, 0.0};
  double w = d == 1 ? detail::max_window_mass_1d(f, K)
                    : detail::max_window_mass_ball(f, d, K, center_cap);
  return {w > 1 - delta, w};
}

inline double density_average(const std::vector<Pmf>& series, int d, double delta,
                              std::int64_t K) {
  if (series.empty()) return 0.0;
  double c = 0;
  for (const auto& f : series)
    if (geo_indicator(f, d, delta, K).flag) c += 1;
  return c / double(series.size());
}

struct SufficientCondition {
  bool holds;
  double lhs;  // beta lambda'(beta) - lambda(beta)
  double rhs;  // walk entropy
};

// Entropy criterion: localization is guaranteed whenever
// beta lambda'(beta) - lambda(beta) exceeds the walk's step entropy.
inline SufficientCondition localization_sufficient(double beta, const EnvironmentLaw& law,
                                                   const StepDistribution& P) {
  if (!(beta < beta_max(law)))
    throw std::domain_error("localization_sufficient: beta >= beta_max");
  double lhs = beta * lambda_prime(law, beta) - lambda(law, beta);
  double rhs = P.entropy();
  return {lhs > rhs, lhs, rhs};
}

// Decaying schedule eps_i = 1 / log(e + i).
inline std::vector<double> decaying_eps_schedule(std::size_t n) {
  std::vector<double> eps(n);
  for (std::size_t i = 0; i < n; ++i)
    eps[i] = 1.0 / std::log(std::exp(1.0) + double(i));
  return eps;
}

}  // namespace polylab
