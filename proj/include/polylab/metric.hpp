#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "polylab/numeric.hpp"
#include "polylab/pspm.hpp"

namespace polylab {

inline constexpr std::int64_t kDegInf = std::numeric_limits<std::int64_t>::max();

// Partial injection on N x Z^d, stored as explicit (source, target) pairs.
struct Isometry {
  std::vector<std::pair<Atom, Atom>> pairs;
};

namespace detail {

// l1 "norm" of u - v with the cross-level convention ||inf||_1 = inf.
inline std::int64_t pair_l1(const Atom& u, const Atom& v) {
  if (u.level != v.level) return kDegInf;
  return l1_norm(u.x - v.x);
}

}  // namespace detail

// Maximum degree: infinite when every same-level source difference maps to
// the identical target difference; otherwise the smallest scale at which the
// difference-preservation condition is violated. Sentinel kDegInf stands for
// infinity and contributes penalty exactly 0.
inline std::int64_t degree(const Isometry& phi) {
  const auto& p = phi.pairs;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i].first == p[j].first || p[i].second == p[j].second)
        throw std::invalid_argument("degree: map is not injective");

  std::int64_t deg = kDegInf;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      const Atom &u = p[i].first, &v = p[j].first;
      const Atom &fu = p[i].second, &fv = p[j].second;
      bool same_src = u.level == v.level;
      bool same_tgt = fu.level == fv.level;
      bool equal_diff = same_src && same_tgt && (u.x - v.x) == (fu.x - fv.x);
      if (same_src != same_tgt || (same_src && !equal_diff)) {
        std::int64_t bound = std::min(detail::pair_l1(u, v), detail::pair_l1(fu, fv));
        deg = std::min(deg, bound);
      }
    }
  }
  return std::max<std::int64_t>(deg, 1);
}

inline double degree_penalty(std::int64_t deg) {
  return deg == kDegInf ? 0.0 : std::exp2(double(-deg));
}

// alpha-distance according to a fixed map phi.
inline double d_alpha_phi(const Pspm& f, const Pspm& g, const Isometry& phi,
                          double alpha) {
  if (!(alpha > 1)) throw std::invalid_argument("d_alpha: need alpha > 1");
  std::set<Atom> dom, img;
  double matched = 0;
  for (const auto& [u, fu] : phi.pairs) {
    dom.insert(u);
    img.insert(fu);
    matched += std::abs(f.at(u) - g.at(fu));
  }
  double un_f = 0, un_g = 0;
  for (const auto& [u, m] : f.entries())
    if (!dom.contains(u)) un_f += std::pow(m, alpha);
  for (const auto& [u, m] : g.entries())
    if (!img.contains(u)) un_g += std::pow(m, alpha);
  return alpha * matched + un_f + un_g + degree_penalty(degree(phi));
}

struct MetricResult {
  double value;
  Isometry argmin;
  std::int64_t argmin_degree;
};

// Exact infimum of d_{alpha,phi} over all injective partial maps from
// support(f) into support(g), plus the empty map. Maps touching zero-mass
// points are dominated (alpha*|m - 0| >= m^alpha on [0,1]), so restricting
// to the two supports loses nothing.
inline MetricResult d_alpha_exact_full(const Pspm& f, const Pspm& g, double alpha,
                                       std::size_t support_cap = 8) {
  if (!(alpha > 1)) throw std::invalid_argument("d_alpha: need alpha > 1");
  if (f.support_size() > support_cap || g.support_size() > support_cap)
    throw std::length_error("d_alpha_exact: support exceeds cap");

  std::vector<std::pair<Atom, double>> fs(f.entries().begin(), f.entries().end());
  std::vector<std::pair<Atom, double>> gs(g.entries().begin(), g.entries().end());

  MetricResult best;
  best.argmin = Isometry{};
  best.argmin_degree = kDegInf;
  best.value = d_alpha_phi(f, g, best.argmin, alpha);

  std::vector<char> used(gs.size(), 0);
  Isometry cur;
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == fs.size()) {
      if (cur.pairs.empty()) return;  // empty map already covered
      double v = d_alpha_phi(f, g, cur, alpha);
      if (v < best.value) {
        best.value = v;
        best.argmin = cur;
        best.argmin_degree = degree(cur);
      }
      return;
    }
    self(self, i + 1);  // leave fs[i] unmatched
    for (std::size_t j = 0; j < gs.size(); ++j) {
      if (used[j]) continue;
      used[j] = 1;
      cur.pairs.push_back({fs[i].first, gs[j].first});
      self(self, i + 1);
      cur.pairs.pop_back();
      used[j] = 0;
    }
  };
  rec(rec, 0);
  return best;
}

inline double d_alpha_exact(const Pspm& f, const Pspm& g, double alpha,
                            std::size_t support_cap = 8) {
  return d_alpha_exact_full(f, g, alpha, support_cap).value;
}

namespace detail {

// Greedy whole-support candidate built from one anchor pairing: pair levels
// by descending mass starting from the anchor levels, translate each paired
// level to align the anchor (resp. heaviest) atoms, and match only atoms
// that land on support(g).
inline Isometry aligned_candidate(const Pspm& f, const Pspm& g, const Atom& fa,
                                  const Atom& ga) {
  struct Lvl {
    std::int32_t level;
    double mass;
    Atom top;
  };
  auto level_table = [](const Pspm& h) {
    std::map<std::int32_t, Lvl> t;
    for (const auto& [u, m] : h.entries()) {
      auto it = t.find(u.level);
      if (it == t.end())
        t.emplace(u.level, Lvl{u.level, m, u});
      else {
        it->second.mass += m;
        if (m > h.at(it->second.top)) it->second.top = u;
      }
    }
    std::vector<Lvl> v;
    for (auto& [lvl, e] : t) v.push_back(e);
    std::sort(v.begin(), v.end(), [](const Lvl& a, const Lvl& b) {
      if (a.mass != b.mass) return a.mass > b.mass;
      return a.level < b.level;
    });
    return v;
  };
  auto fl = level_table(f);
  auto gl = level_table(g);

  // level pairing: anchor levels first, then by mass rank
  std::vector<std::pair<std::int32_t, std::pair<std::int32_t, Vec>>> lvl_map;
  std::vector<char> f_used(fl.size(), 0), g_used(gl.size(), 0);
  lvl_map.push_back({fa.level, {ga.level, ga.x - fa.x}});
  for (std::size_t i = 0; i < fl.size(); ++i)
    if (fl[i].level == fa.level) f_used[i] = 1;
  for (std::size_t j = 0; j < gl.size(); ++j)
    if (gl[j].level == ga.level) g_used[j] = 1;
  std::size_t j = 0;
  for (std::size_t i = 0; i < fl.size(); ++i) {
    if (f_used[i]) continue;
    while (j < gl.size() && g_used[j]) ++j;
    if (j == gl.size()) break;
    lvl_map.push_back(
        {fl[i].level, {gl[j].level, gl[j].top.x - fl[i].top.x}});
    g_used[j] = 1;
  }

  Isometry phi;
  for (const auto& [flvl, tgt] : lvl_map) {
    const auto& [glvl, shift] = tgt;
    for (const auto& [u, m] : f.entries()) {
      if (u.level != flvl) continue;
      Atom target{glvl, u.x + shift};
      if (g.at(target) > 0) phi.pairs.push_back({u, target});
    }
  }
  return phi;
}

// Drop pairs whose matched cost exceeds the cost of leaving both ends
// unmatched. Removing pairs never lowers the degree, so the pruned map is
// at least as cheap on every term.
inline Isometry prune_candidate(const Pspm& f, const Pspm& g, const Isometry& phi,
                                double alpha) {
  Isometry out;
  for (const auto& [u, v] : phi.pairs) {
    double keep = alpha * std::abs(f.at(u) - g.at(v));
    double drop = std::pow(f.at(u), alpha) + std::pow(g.at(v), alpha);
    if (keep <= drop) out.pairs.push_back({u, v});
  }
  return out;
}

// Injective matching by greedy best marginal gain, geometry ignored; the
// degree penalty it incurs is paid for honestly at evaluation time.
inline Isometry greedy_candidate(const Pspm& f, const Pspm& g, double alpha) {
  struct Cand {
    double gain;
    Atom u, v;
  };
  std::vector<Cand> cands;
  for (const auto& [u, fm] : f.entries())
    for (const auto& [v, gm] : g.entries()) {
      double gain = alpha * std::abs(fm - gm) - std::pow(fm, alpha) - std::pow(gm, alpha);
      if (gain < 0) cands.push_back({gain, u, v});
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.gain != b.gain) return a.gain < b.gain;
    return std::pair(a.u, a.v) < std::pair(b.u, b.v);
  });
  Isometry phi;
  std::set<Atom> dom, img;
  for (const Cand& c : cands) {
    if (dom.contains(c.u) || img.contains(c.v)) continue;
    dom.insert(c.u);
    img.insert(c.v);
    phi.pairs.push_back({c.u, c.v});
  }
  return phi;
}

}  // namespace detail

// Heuristic upper bound on d_alpha: best of the empty map, translation-
// aligned candidates anchored at each pairing of the top atoms of f and g,
// their greedily pruned variants, and a geometry-blind greedy matching.
// Every candidate is a genuine injective map, so the result always
// dominates the infimum.
inline MetricResult d_alpha_upper_full(const Pspm& f, const Pspm& g, double alpha,
                                       std::size_t anchors = 4) {
  if (!(alpha > 1)) throw std::invalid_argument("d_alpha: need alpha > 1");
  MetricResult best;
  best.argmin = Isometry{};
  best.argmin_degree = kDegInf;
  best.value = d_alpha_phi(f, g, best.argmin, alpha);

  auto consider = [&](Isometry phi) {
    double v = d_alpha_phi(f, g, phi, alpha);
    if (v < best.value) {
      best.value = v;
      best.argmin = std::move(phi);
      best.argmin_degree = degree(best.argmin);
    }
  };

  auto top_atoms = [&](const Pspm& h) {
    std::vector<std::pair<Atom, double>> v(h.entries().begin(), h.entries().end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    if (v.size() > anchors) v.resize(anchors);
    return v;
  };

  for (const auto& [fa, fm] : top_atoms(f)) {
    for (const auto& [ga, gm] : top_atoms(g)) {
      Isometry phi = detail::aligned_candidate(f, g, fa, ga);
      consider(detail::prune_candidate(f, g, phi, alpha));
      consider(std::move(phi));
    }
  }
  {
    Isometry greedy = detail::greedy_candidate(f, g, alpha);
    consider(detail::prune_candidate(f, g, greedy, alpha));
    consider(std::move(greedy));
  }
  return best;
}

inline double d_alpha_upper(const Pspm& f, const Pspm& g, double alpha) {
  return d_alpha_upper_full(f, g, alpha).value;
}

// Preferred distance: exact for small supports, aligned upper bound otherwise.
inline double d_alpha(const Pspm& f, const Pspm& g, double alpha,
                      std::size_t exact_cap = 8) {
  if (f.support_size() <= exact_cap && g.support_size() <= exact_cap)
    return d_alpha_exact(f, g, alpha, exact_cap);
  return d_alpha_upper(f, g, alpha);
}

// ---------------------------------------------------------------------------
// Optimal assignment (Hungarian algorithm with potentials, O(N^3)).

inline double solve_assignment(const std::vector<std::vector<double>>& cost,
                               std::vector<int>* match_out = nullptr) {
  int n = int(cost.size());
  if (n == 0) return 0.0;
  std::vector<double> u(std::size_t(n) + 1), v(std::size_t(n) + 1);
  std::vector<int> p(std::size_t(n) + 1), way(std::size_t(n) + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(std::size_t(n) + 1, kInf);
    std::vector<char> used(std::size_t(n) + 1, 0);
    do {
      used[std::size_t(j0)] = 1;
      int i0 = p[std::size_t(j0)], j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[std::size_t(j)]) continue;
        double cur = cost[std::size_t(i0) - 1][std::size_t(j) - 1] -
                     u[std::size_t(i0)] - v[std::size_t(j)];
        if (cur < minv[std::size_t(j)]) {
          minv[std::size_t(j)] = cur;
          way[std::size_t(j)] = j0;
        }
        if (minv[std::size_t(j)] < delta) {
          delta = minv[std::size_t(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[std::size_t(j)]) {
          u[std::size_t(p[std::size_t(j)])] += delta;
          v[std::size_t(j)] -= delta;
        } else {
          minv[std::size_t(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[std::size_t(j0)] != 0);
    do {
      int j1 = way[std::size_t(j0)];
      p[std::size_t(j0)] = p[std::size_t(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double total = 0;
  if (match_out) match_out->assign(std::size_t(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[std::size_t(j)] == 0) continue;
    total += cost[std::size_t(p[std::size_t(j)]) - 1][std::size_t(j) - 1];
    if (match_out) (*match_out)[std::size_t(p[std::size_t(j)]) - 1] = j - 1;
  }
  return total;
}

// Wasserstein distance between two uniformly weighted empirical measures
// with equal atom counts: optimal assignment over pairwise d_alpha.
inline double wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                          double alpha, std::size_t exact_cap = 8) {
  std::size_t n = mu.atoms.size();
  if (n != nu.atoms.size())
    throw std::invalid_argument("wasserstein: unequal atom counts");
  if (n > 512) throw std::length_error("wasserstein: atom count exceeds 512");
  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i][j] = d_alpha(mu.atoms[i], nu.atoms[j], alpha, exact_cap);
  return solve_assignment(cost) / double(n);
}

}  // namespace polylab
