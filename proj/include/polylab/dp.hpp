#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "polylab/field.hpp"
#include "polylab/numeric.hpp"
#include "polylab/rng.hpp"
#include "polylab/walk.hpp"

namespace polylab {

// Endpoint support truncation. Sites whose endpoint mass falls below
// tau_rel times the maximum are dropped after each step, and optionally the
// support is capped at the max_support heaviest sites. Dropped mass is
// accounted multiplicatively, never silently.
struct TruncationPolicy {
  bool enabled = true;
  double tau_rel = 1e-14;
  double ledger_warn = 1e-6;
  std::size_t max_support = std::size_t(-1);

  static TruncationPolicy off() { return {false, 0.0, 1e-6, std::size_t(-1)}; }
};

// Sparse log-domain weights {x -> log Z_n(x)} at time n. log_z is the
// log-sum-exp of the stored weights. log_retained tracks the cumulative
// fraction of polymer mass surviving truncation (0 when truncation is off).
struct PolymerState {
  std::int64_t n = 0;
  std::unordered_map<std::uint64_t, double> log_weights;  // packed site -> log Z_n(x)
  double log_z = 0.0;
  double log_retained = 0.0;
  bool truncation_warned = false;

  double dropped_mass() const { return -std::expm1(log_retained); }
};

inline PolymerState init_state() {
  PolymerState s;
  s.log_weights.emplace(pack_site(Vec{0, 0, 0}), 0.0);
  return s;
}

inline double free_energy(const PolymerState& s) {
  if (s.n < 1) throw std::domain_error("free_energy undefined at n = 0");
  return s.log_z / double(s.n);
}

// f_n(x) = Z_n(x)/Z_n, scaled by the retained fraction so that the result
// sums to 1 - dropped_mass.
inline std::map<Vec, double> endpoint_distribution(const PolymerState& s) {
  std::map<Vec, double> f;
  double retained = std::exp(s.log_retained);
  for (const auto& [k, lw] : s.log_weights)
    f[unpack_site(k)] = std::exp(lw - s.log_z) * retained;
  return f;
}

// Same support, but conditioned on the kept sites (sums to 1). This is the
// right input for localization statistics when truncation is active.
inline std::map<Vec, double> endpoint_distribution_normalized(const PolymerState& s) {
  std::map<Vec, double> f;
  for (const auto& [k, lw] : s.log_weights)
    f[unpack_site(k)] = std::exp(lw - s.log_z);
  return f;
}

inline PolymerState advance(const PolymerState& state, const StepDistribution& P,
                            const SeededField& field, double beta,
                            const TruncationPolicy& trunc = TruncationPolicy{}) {
  double bmax = beta_max(field.law());
  if (!(beta > 0) || !(beta < bmax))
    throw std::domain_error("advance: need 0 < beta < beta_max");

  PolymerState next;
  next.n = state.n + 1;
  next.log_retained = state.log_retained;
  next.truncation_warned = state.truncation_warned;

  // Convolution in a linear domain scaled by the running max log-weight.
  double shift = -kInf;
  for (const auto& [k, lw] : state.log_weights) shift = std::max(shift, lw);

  std::unordered_map<std::uint64_t, double> acc;
  acc.reserve(state.log_weights.size() * (P.pmf().size() + 1));
  for (const auto& [k, lw] : state.log_weights) {
    double w = std::exp(lw - shift);
    Vec y = unpack_site(k);
    for (const auto& [z, q] : P.pmf()) acc[pack_site(y + z)] += w * q;
  }

  next.log_weights.reserve(acc.size());
  double max_lw = -kInf;
  for (const auto& [k, a] : acc) {
    double lw = shift + std::log(a) +
                beta * field.evaluate(next.n, unpack_site(k));
    next.log_weights.emplace(k, lw);
    max_lw = std::max(max_lw, lw);
  }

  auto lse = [&](const std::unordered_map<std::uint64_t, double>& m) {
    double s = 0;
    for (const auto& [k, lw] : m) s += std::exp(lw - max_lw);
    return max_lw + std::log(s);
  };
  double log_z_full = lse(next.log_weights);

  if (trunc.enabled) {
    double cut = max_lw + std::log(trunc.tau_rel);
    std::erase_if(next.log_weights,
                  [&](const auto& kv) { return kv.second < cut; });
    if (next.log_weights.size() > trunc.max_support) {
      std::vector<double> lws;
      lws.reserve(next.log_weights.size());
      for (const auto& [k, lw] : next.log_weights) lws.push_back(lw);
      auto nth = lws.begin() + (lws.size() - trunc.max_support);
      std::nth_element(lws.begin(), nth, lws.end());
      double cap_cut = *nth;
      // keep ties deterministically: strictly-below goes, at-threshold kept
      // only until the cap is met, in packed-key order
      std::vector<std::uint64_t> at_cut;
      std::erase_if(next.log_weights, [&](const auto& kv) {
        if (kv.second < cap_cut) return true;
        if (kv.second == cap_cut) at_cut.push_back(kv.first);
        return false;
      });
      if (next.log_weights.size() > trunc.max_support) {
        std::sort(at_cut.begin(), at_cut.end());
        std::size_t excess = next.log_weights.size() - trunc.max_support;
        for (std::size_t i = 0; i < excess && i < at_cut.size(); ++i)
          next.log_weights.erase(at_cut[i]);
      }
    }
    double log_z_kept = lse(next.log_weights);
    next.log_retained += log_z_kept - log_z_full;
    next.log_z = log_z_kept;
    if (next.dropped_mass() > trunc.ledger_warn) next.truncation_warned = true;
  } else {
    next.log_z = log_z_full;
  }
  return next;
}

// Exact log Z_n by summing over every n-step path. This is the independent
// oracle for the DP recursion; guarded by |support|^n <= 1e7.
inline double brute_force_log_Z(const StepDistribution& P, const SeededField& field,
                                double beta, int n) {
  if (n < 0) throw std::invalid_argument("brute_force_log_Z: n < 0");
  double paths = std::pow(double(P.pmf().size()), double(n));
  if (paths > 1e7) throw std::length_error("brute_force_log_Z: enumeration guard");
  if (n == 0) return 0.0;

  std::vector<double> terms;
  terms.reserve(std::size_t(paths));
  std::vector<std::pair<Vec, double>> steps(P.pmf().begin(), P.pmf().end());
  // iterative DFS over step indices
  std::vector<std::size_t> idx(std::size_t(n), 0);
  std::vector<Vec> pos(std::size_t(n) + 1, Vec{0, 0, 0});
  std::vector<double> lw(std::size_t(n) + 1, 0.0);
  int depth = 0;
  while (depth >= 0) {
    if (depth == n) {
      terms.push_back(lw[std::size_t(n)]);
      --depth;
      continue;
    }
    if (idx[std::size_t(depth)] == steps.size()) {
      idx[std::size_t(depth)] = 0;
      --depth;
      continue;
    }
    const auto& [z, q] = steps[idx[std::size_t(depth)]++];
    pos[std::size_t(depth) + 1] = pos[std::size_t(depth)] + z;
    lw[std::size_t(depth) + 1] =
        lw[std::size_t(depth)] + std::log(q) +
        beta * field.evaluate(depth + 1, pos[std::size_t(depth) + 1]);
    ++depth;
  }
  return log_sum_exp(terms);
}

// Endpoint-resolved path sums: log Z_n(x) for every reachable x.
inline std::map<Vec, double> brute_force_endpoint_log_Z(const StepDistribution& P,
                                                        const SeededField& field,
                                                        double beta, int n) {
  double paths = std::pow(double(P.pmf().size()), double(n));
  if (paths > 1e7) throw std::length_error("brute_force_endpoint_log_Z: enumeration guard");
  std::map<Vec, std::vector<double>> buckets;
  std::vector<std::pair<Vec, double>> steps(P.pmf().begin(), P.pmf().end());

  // recursive enumeration, small n only
  auto rec = [&](auto&& self, int depth, Vec pos, double lw) -> void {
    if (depth == n) {
      buckets[pos].push_back(lw);
      return;
    }
    for (const auto& [z, q] : steps) {
      Vec nx = pos + z;
      self(self, depth + 1, nx,
           lw + std::log(q) + beta * field.evaluate(depth + 1, nx));
    }
  };
  rec(rec, 0, Vec{0, 0, 0}, 0.0);

  std::map<Vec, double> out;
  for (auto& [x, terms] : buckets) out[x] = log_sum_exp(terms);
  return out;
}

// Residual of the decomposition Z_n = sum_y Z_k(y) (Z_{n-k} o theta_{k,y}),
// both sides evaluated by exact enumeration.
inline double shift_identity_check(const StepDistribution& P, const SeededField& field,
                                   double beta, int n, int k) {
  if (k < 0 || k > n) throw std::invalid_argument("shift_identity_check: need 0 <= k <= n");
  double lhs = brute_force_log_Z(P, field, beta, n);
  auto zk = brute_force_endpoint_log_Z(P, field, beta, k);
  std::vector<double> terms;
  terms.reserve(zk.size());
  for (const auto& [y, lzy] : zk) {
    double tail = brute_force_log_Z(P, field.shift_view(k, y), beta, n - k);
    terms.push_back(lzy + tail);
  }
  double rhs = log_sum_exp(terms);
  return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Replica harness

struct ReplicaPoint {
  std::uint64_t seed;
  std::int64_t n;
  double log_z;
  double free_energy;
  double dropped_mass;
};

struct ReplicaSummary {
  double beta;
  std::int64_t n;
  double mean_f;
  double se_f;
  double lambda;
  double gap;  // lambda - mean_f
};

struct ReplicaResults {
  std::vector<std::vector<ReplicaPoint>> per_seed;  // checkpoint series
  std::vector<std::uint64_t> seeds;
  ReplicaSummary summary;
};

// Checkpoint grid: powers of two plus the final step.
inline std::vector<std::int64_t> checkpoint_grid(std::int64_t n) {
  std::vector<std::int64_t> g;
  for (std::int64_t c = 1; c < n; c *= 2) g.push_back(c);
  g.push_back(n);
  return g;
}

inline constexpr std::uint64_t kSeedPurposeField = 0x11;

inline ReplicaResults run_replicas(const EnvironmentLaw& law, const StepDistribution& P,
                                   double beta, std::int64_t n, std::uint64_t base_seed,
                                   int num_seeds,
                                   const TruncationPolicy& trunc = TruncationPolicy{}) {
  if (num_seeds < 1 || n < 1)
    throw std::invalid_argument("run_replicas: need seeds >= 1 and n >= 1");
  ReplicaResults res;
  auto grid = checkpoint_grid(n);
  RunningStats final_f;
  for (int s = 0; s < num_seeds; ++s) {
    std::uint64_t seed = derive_seed(base_seed, kSeedPurposeField, std::uint64_t(s));
    res.seeds.push_back(seed);
    SeededField field(seed, law);
    PolymerState st = init_state();
    std::vector<ReplicaPoint> series;
    std::size_t gi = 0;
    for (std::int64_t i = 1; i <= n; ++i) {
      st = advance(st, P, field, beta, trunc);
      if (gi < grid.size() && grid[gi] == i) {
        series.push_back({seed, i, st.log_z, free_energy(st), st.dropped_mass()});
        ++gi;
      }
    }
    final_f.add(free_energy(st));
    res.per_seed.push_back(std::move(series));
  }
  double lam = lambda(law, beta);
  res.summary = {beta, n, final_f.mean, final_f.stderror(), lam, lam - final_f.mean};
  return res;
}

}  // namespace polylab
