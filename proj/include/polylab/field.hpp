#pragma once

#include <cstdint>
#include <stdexcept>

#include "polylab/env.hpp"
#include "polylab/lattice.hpp"
#include "polylab/rng.hpp"

namespace polylab {

// Deterministic space-time disorder field: eta(i,x) is a pure function of
// (seed, law, i, x) via a counter-based hash fed through the law's quantile
// transform. Shift views compose offsets without touching the seed, so the
// theta_{k,y} identities hold bit-exactly.
//
// The chain side needs i.i.d. rows over N x Z^d at a fixed time; level 1 of
// row(i) coincides with eta(i, .) so the endpoint chain and the DP consume
// the same disorder.
class SeededField {
 public:
  SeededField(std::uint64_t seed, EnvironmentLaw law)
      : seed_(seed), law_(law) {}

  // eta at lattice point x, level of the compactification space.
  double sample(std::int64_t time, std::int32_t level, const Vec& x) const {
    Vec xs = x + space_offset_;
    std::uint64_t h =
        mix64(mix64(seed_, std::uint64_t(time + time_offset_)),
              std::uint64_t(level), pack_site(xs));
    return quantile(law_, to_unit(h));
  }

  double evaluate(std::int64_t i, const Vec& x) const {
    if (i < 1) throw std::invalid_argument("field: time index must be >= 1");
    return sample(i, 1, x);
  }

  // View of the field shifted by theta_{k,y}: (theta eta)(i,x) = eta(i+k, x+y).
  SeededField shift_view(std::int64_t k, const Vec& y) const {
    if (k < 0) throw std::invalid_argument("shift_view: k must be >= 0");
    SeededField f = *this;
    f.time_offset_ += k;
    f.space_offset_ = f.space_offset_ + y;
    return f;
  }

  std::uint64_t seed() const { return seed_; }
  const EnvironmentLaw& law() const { return law_; }
  std::int64_t time_offset() const { return time_offset_; }
  const Vec& space_offset() const { return space_offset_; }

 private:
  std::uint64_t seed_;
  EnvironmentLaw law_;
  std::int64_t time_offset_ = 0;
  Vec space_offset_ = {0, 0, 0};
};

// One time-slice of a field, indexed by points of N x Z^d. This is the
// environment row consumed by a single update-map application.
class EnvironmentRow {
 public:
  EnvironmentRow(const SeededField& field, std::int64_t time)
      : field_(&field), time_(time) {}

  double operator()(std::int32_t level, const Vec& x) const {
    return field_->sample(time_, level, x);
  }

 private:
  const SeededField* field_;
  std::int64_t time_;
};

}  // namespace polylab
