#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "polylab/pspm.hpp"
#include "polylab/rng.hpp"
#include "polylab/walk.hpp"

namespace polylab {

// Random small instances shared by the oracle command and the test suites.

// Random sparse Pspm: up to max_support atoms over levels 1..max_level and
// coordinates in [-radius, radius]^d, total mass `mass` (<= 1).
inline Pspm random_pspm(CounterRng& rng, int d, std::size_t max_support,
                        std::int32_t max_level, std::int32_t radius, double mass) {
  std::size_t k = 1 + rng.next_below(max_support);
  std::set<Atom> sites;
  while (sites.size() < k) {
    Atom u;
    u.level = 1 + std::int32_t(rng.next_below(std::uint64_t(max_level)));
    u.x = {0, 0, 0};
    for (int j = 0; j < d; ++j)
      u.x[std::size_t(j)] =
          std::int32_t(rng.next_below(std::uint64_t(2 * radius + 1))) - radius;
    sites.insert(u);
  }
  std::vector<double> w;
  double total = 0;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    w.push_back(0.05 + rng.next_unit());
    total += w.back();
  }
  Pspm f;
  std::size_t i = 0;
  for (const Atom& u : sites) f.set(u, mass * w[i++] / total);
  return f;
}

// Random 1d step distribution with 2..max_support distinct offsets in
// [-3, 3] \ {pattern allowing 0}; probabilities strictly inside (0,1).
inline StepDistribution random_walk_1d(CounterRng& rng, std::size_t max_support = 4) {
  std::size_t k = 2 + rng.next_below(max_support - 1);
  std::set<std::int32_t> offs;
  while (offs.size() < k) offs.insert(std::int32_t(rng.next_below(7)) - 3);
  std::vector<double> w;
  double total = 0;
  for (std::size_t i = 0; i < offs.size(); ++i) {
    w.push_back(0.1 + rng.next_unit());
    total += w.back();
  }
  std::map<Vec, double> pmf;
  std::size_t i = 0;
  for (std::int32_t z : offs) pmf[vec1(z)] = w[i++] / total;
  // fix rounding so the mass sums to 1 exactly enough for validation
  return StepDistribution(1, std::move(pmf));
}

}  // namespace polylab
