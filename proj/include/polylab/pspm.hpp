#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "polylab/lattice.hpp"

namespace polylab {

// Partitioned subprobability measure: sparse nonnegative mass on N x Z^d
// with total mass at most 1. Zero-mass entries are never stored. The zero
// element (no entries) plays the role of the paper-style bold-zero point.
class Pspm {
 public:
  Pspm() = default;

  static Pspm from_atoms(std::map<Atom, double> entries) {
    Pspm f;
    for (auto& [u, m] : entries) f.set(u, m);
    f.check_mass();
    return f;
  }

  void set(const Atom& u, double mass) {
    if (u.level < 1) throw std::invalid_argument("pspm: level must be >= 1");
    if (mass < 0) throw std::invalid_argument("pspm: negative mass");
    if (mass == 0) return;
    norm_ += mass - std::exchange(entries_[u], mass);
  }

  double at(const Atom& u) const {
    auto it = entries_.find(u);
    return it == entries_.end() ? 0.0 : it->second;
  }

  const std::map<Atom, double>& entries() const { return entries_; }
  double norm() const { return norm_; }
  bool is_zero() const { return entries_.empty(); }
  std::size_t support_size() const { return entries_.size(); }

  std::set<std::int32_t> levels() const {
    std::set<std::int32_t> h;
    for (const auto& [u, m] : entries_) h.insert(u.level);
    return h;
  }

  void check_mass() const {
    if (norm_ > 1.0 + 1e-12) throw std::invalid_argument("pspm: total mass exceeds 1");
  }

  friend bool operator==(const Pspm&, const Pspm&) = default;

 private:
  std::map<Atom, double> entries_;
  double norm_ = 0.0;
};

// Endpoint pmf embedded at level 1.
inline Pspm embed(const std::map<Vec, double>& pmf) {
  Pspm f;
  for (const auto& [x, m] : pmf)
    if (m != 0) f.set(Atom{1, x}, m);
  f.check_mass();
  return f;
}

inline Pspm point_mass() { return embed({{Vec{0, 0, 0}, 1.0}}); }

// Keep the `keep` heaviest atoms; ties broken lexicographically on (level, x).
inline Pspm truncate(const Pspm& f, std::size_t keep) {
  if (keep < 1) throw std::invalid_argument("truncate: keep must be >= 1");
  if (f.support_size() <= keep) return f;
  std::vector<std::pair<Atom, double>> atoms(f.entries().begin(), f.entries().end());
  std::stable_sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Pspm out;
  for (std::size_t i = 0; i < keep; ++i) out.set(atoms[i].first, atoms[i].second);
  return out;
}

// Shift every atom of level `level` by y (same element of S).
inline Pspm translate_level(const Pspm& f, std::int32_t level, const Vec& y) {
  Pspm out;
  for (const auto& [u, m] : f.entries())
    out.set(u.level == level ? Atom{u.level, u.x + y} : u, m);
  return out;
}

// Apply a level bijection sigma and per-level translations; this walks the
// equivalence class of f without changing the element of S.
inline Pspm relabel(const Pspm& f, const std::map<std::int32_t, std::int32_t>& sigma,
                    const std::map<std::int32_t, Vec>& shifts) {
  Pspm out;
  for (const auto& [u, m] : f.entries()) {
    std::int32_t lvl = u.level;
    if (auto it = sigma.find(lvl); it != sigma.end()) lvl = it->second;
    Vec x = u.x;
    if (auto it = shifts.find(u.level); it != shifts.end()) x = x + it->second;
    out.set(Atom{lvl, x}, m);
  }
  return out;
}

// Orbit-canonical form: per level, shift so the lexicographically smallest
// support point is at the origin; then relabel levels 1..k ordered by
// (descending level mass, lexicographic atom list). Two elements of S_0 are
// in the same equivalence class iff their canonical forms are equal.
inline Pspm canonical(const Pspm& f) {
  struct LevelBlock {
    double mass;
    std::vector<std::pair<Vec, double>> atoms;  // shifted, sorted
  };
  std::map<std::int32_t, std::vector<std::pair<Vec, double>>> by_level;
  for (const auto& [u, m] : f.entries()) by_level[u.level].push_back({u.x, m});

  std::vector<LevelBlock> blocks;
  for (auto& [lvl, atoms] : by_level) {
    std::sort(atoms.begin(), atoms.end());
    Vec base = atoms.front().first;
    LevelBlock b;
    b.mass = 0;
    for (auto& [x, m] : atoms) {
      b.atoms.push_back({x - base, m});
      b.mass += m;
    }
    blocks.push_back(std::move(b));
  }
  std::sort(blocks.begin(), blocks.end(), [](const LevelBlock& a, const LevelBlock& b) {
    if (a.mass != b.mass) return a.mass > b.mass;
    return a.atoms < b.atoms;
  });

  Pspm out;
  std::int32_t lvl = 1;
  for (const auto& b : blocks) {
    for (const auto& [x, m] : b.atoms) out.set(Atom{lvl, x}, m);
    ++lvl;
  }
  return out;
}

// Uniformly weighted finite collection of Pspm points; the empirical measure
// of an endpoint trajectory.
struct EmpiricalMeasure {
  std::vector<Pspm> atoms;

  explicit EmpiricalMeasure(std::vector<Pspm> a) : atoms(std::move(a)) {
    if (atoms.empty()) throw std::invalid_argument("empirical measure: no atoms");
  }
};

}  // namespace polylab
