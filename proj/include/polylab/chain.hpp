#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "polylab/dp.hpp"
#include "polylab/env.hpp"
#include "polylab/field.hpp"
#include "polylab/metric.hpp"
#include "polylab/numeric.hpp"
#include "polylab/pspm.hpp"
#include "polylab/rng.hpp"
#include "polylab/walk.hpp"

namespace polylab {

// Parameters of the endpoint chain. alpha must satisfy alpha*beta < beta_max
// so that the metric and the moment bounds are in force.
struct UpdateContext {
  StepDistribution walk;
  double beta;
  EnvironmentLaw law;
  double alpha;
  std::uint64_t stream = 0;

  UpdateContext(StepDistribution w, double beta_, EnvironmentLaw l, double alpha_,
                std::uint64_t stream_ = 0)
      : walk(std::move(w)), beta(beta_), law(l), alpha(alpha_), stream(stream_) {
    if (!(beta > 0) || !(alpha > 1) || !(alpha * beta < beta_max(law)))
      throw std::domain_error("update context: need 0 < beta and alpha*beta < beta_max");
  }
};

// Default alpha: 2 for light-tailed laws, otherwise the midpoint of
// (1, beta_max/beta) clamped to (1, 2].
inline double auto_alpha(const EnvironmentLaw& law, double beta) {
  double bm = beta_max(law);
  if (bm == kInf) return 2.0;
  double a = 0.5 * (1.0 + bm / beta);
  return std::min(a, 2.0);
}

// Fresh i.i.d. environment row over N x Z^d, keyed by a stream seed.
struct SyntheticRow {
  std::uint64_t seed;
  EnvironmentLaw law;

  double operator()(std::int32_t level, const Vec& x) const {
    return quantile(law, to_unit(mix64(seed, std::uint64_t(level), pack_site(x))));
  }
};

namespace detail {

// log of the one-step normalizer D, plus the per-target log numerators.
// Within-level transitions only; the missing mass 1 - ||f|| contributes the
// annealed slack (1 - ||f||) e^{lambda(beta)}.
template <class Row>
double update_terms(const Pspm& f, const UpdateContext& ctx, Row&& row,
                    std::unordered_map<Atom, double, AtomHash>* log_num_out) {
  double lam = lambda(ctx.law, ctx.beta);
  double slack = std::max(0.0, 1.0 - f.norm());

  std::unordered_map<Atom, double, AtomHash> inner;  // sum_v f(v) P(v,u)
  inner.reserve(f.support_size() * (ctx.walk.pmf().size() + 1));
  for (const auto& [v, m] : f.entries())
    for (const auto& [z, q] : ctx.walk.pmf()) inner[Atom{v.level, v.x + z}] += m * q;

  std::vector<double> terms;
  terms.reserve(inner.size() + 1);
  for (const auto& [u, s] : inner) {
    double ln = std::log(s) + ctx.beta * row(u.level, u.x);
    if (log_num_out) (*log_num_out)[u] = ln;
    terms.push_back(ln);
  }
  if (slack > 0) terms.push_back(std::log(slack) + lam);
  return log_sum_exp(terms);
}

}  // namespace detail

struct UpdateResult {
  Pspm next;
  double log_ratio;
};

// One application of the update map to f, driven by the given environment
// row. The zero element is an exact fixed point with log ratio lambda(beta).
template <class Row>
UpdateResult apply_update(const Pspm& f, const UpdateContext& ctx, Row&& row,
                          const TruncationPolicy& trunc = TruncationPolicy::off()) {
  if (f.is_zero()) return {Pspm{}, lambda(ctx.law, ctx.beta)};

  std::unordered_map<Atom, double, AtomHash> log_num;
  double log_d = detail::update_terms(f, ctx, row, &log_num);

  double max_ln = -kInf;
  for (const auto& [u, ln] : log_num) max_ln = std::max(max_ln, ln);
  double cut = trunc.enabled ? max_ln + std::log(trunc.tau_rel) : -kInf;

  Pspm next;
  for (const auto& [u, ln] : log_num) {
    if (ln < cut) continue;
    next.set(u, std::exp(ln - log_d));
  }
  return {std::move(next), log_d};
}

inline UpdateResult apply_update(const Pspm& f, const UpdateContext& ctx,
                                 const SeededField& field, std::int64_t time,
                                 const TruncationPolicy& trunc = TruncationPolicy::off()) {
  return apply_update(f, ctx, EnvironmentRow(field, time), trunc);
}

// log D only, for Monte Carlo functionals.
template <class Row>
double update_log_ratio(const Pspm& f, const UpdateContext& ctx, Row&& row) {
  if (f.is_zero()) return lambda(ctx.law, ctx.beta);
  return detail::update_terms(f, ctx, row, nullptr);
}

struct Estimate {
  double value;
  double se;
};

inline constexpr std::uint64_t kSeedPurposeEnergyRow = 0x21;
inline constexpr std::uint64_t kSeedPurposeStationarity = 0x22;

// R(f) = E log D, estimated over M independent environment rows. Exact
// shortcut R(0) = lambda(beta).
inline Estimate energy_R(const Pspm& f, const UpdateContext& ctx, long long samples,
                         std::uint64_t seed) {
  if (f.is_zero()) return {lambda(ctx.law, ctx.beta), 0.0};
  if (samples < 2) throw std::invalid_argument("energy_R: need samples >= 2");
  RunningStats stats;
  for (long long m = 0; m < samples; ++m) {
    SyntheticRow row{derive_seed(seed, kSeedPurposeEnergyRow, std::uint64_t(m)), ctx.law};
    stats.add(update_log_ratio(f, ctx, row));
  }
  return {stats.mean, stats.stderror()};
}

// Lift of R to an empirical measure: average over atoms, SEs combined in
// quadrature.
inline Estimate lifted_R(const EmpiricalMeasure& mu, const UpdateContext& ctx,
                         long long samples_per_atom, std::uint64_t seed) {
  double sum = 0, var = 0;
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    Estimate e = energy_R(mu.atoms[i], ctx, samples_per_atom, mix64(seed, i));
    sum += e.value;
    var += e.se * e.se;
  }
  double n = double(mu.atoms.size());
  return {sum / n, std::sqrt(var) / n};
}

// ---------------------------------------------------------------------------
// Chain trajectories

struct ChainTrajectory {
  std::vector<Pspm> states;       // f_0 .. f_n, snapshots capped at store_cap atoms
  std::vector<double> log_ratios; // log(Z_{i+1}/Z_i), length n

  double free_energy() const {
    if (log_ratios.empty()) throw std::domain_error("trajectory has no steps");
    double s = 0;
    for (double r : log_ratios) s += r;
    return s / double(log_ratios.size());
  }

  EmpiricalMeasure empirical_measure(std::size_t through) const {
    std::vector<Pspm> atoms(states.begin(), states.begin() + long(through) + 1);
    return EmpiricalMeasure(std::move(atoms));
  }

  // Uniform strided m-atom subsample of mu_{through}.
  EmpiricalMeasure subsample(std::size_t through, std::size_t m) const {
    if (through + 1 < m) throw std::invalid_argument("subsample: trajectory too short");
    std::vector<Pspm> atoms;
    atoms.reserve(m);
    for (std::size_t i = 0; i < m; ++i)
      atoms.push_back(states[i * (through + 1) / m]);
    return EmpiricalMeasure(std::move(atoms));
  }
};

// Iterate the update map from embed(delta_0), with environment rows keyed by
// time on the given field so level 1 coincides with the DP disorder.
inline ChainTrajectory run_chain(const UpdateContext& ctx, std::int64_t n,
                                 std::uint64_t field_seed,
                                 const TruncationPolicy& trunc = TruncationPolicy::off(),
                                 std::size_t store_cap = std::size_t(-1),
                                 const Pspm* initial = nullptr) {
  SeededField field(field_seed, ctx.law);
  ChainTrajectory traj;
  Pspm f = initial ? *initial : point_mass();
  auto snapshot = [&](const Pspm& g) {
    traj.states.push_back(store_cap == std::size_t(-1) || g.is_zero()
                              ? g
                              : truncate(g, store_cap));
  };
  snapshot(f);
  for (std::int64_t i = 1; i <= n; ++i) {
    auto [next, log_ratio] = apply_update(f, ctx, field, i, trunc);
    traj.log_ratios.push_back(log_ratio);
    f = std::move(next);
    snapshot(f);
  }
  return traj;
}

// Empirical stationarity diagnostic: Wasserstein gap between an m-atom
// subsample mu-hat of mu_n and one sampled update of each of its atoms.
inline double stationarity_gap(const ChainTrajectory& traj, const UpdateContext& ctx,
                               std::size_t m, std::uint64_t seed,
                               std::size_t atom_cap = 32) {
  if (traj.states.empty()) throw std::invalid_argument("stationarity_gap: empty trajectory");
  EmpiricalMeasure mu = traj.subsample(traj.states.size() - 1, m);
  std::vector<Pspm> pushed;
  pushed.reserve(m);
  for (std::size_t i = 0; i < mu.atoms.size(); ++i) {
    mu.atoms[i] = mu.atoms[i].is_zero() ? mu.atoms[i] : truncate(mu.atoms[i], atom_cap);
    SyntheticRow row{derive_seed(seed, kSeedPurposeStationarity, i), ctx.law};
    auto [next, lr] = apply_update(mu.atoms[i], ctx, row);
    pushed.push_back(next.is_zero() ? next : truncate(next, atom_cap));
  }
  return wasserstein(mu, EmpiricalMeasure(std::move(pushed)), ctx.alpha);
}

// Centered fourth moment of W = log D for a unit-norm f, against the
// closed-form bound 160 (e^{lambda(-beta)} + e^{lambda(beta)}).
struct FourthMomentResult {
  double estimate;
  double se;
  double bound;
};

inline FourthMomentResult fourth_moment_check(const Pspm& f, const UpdateContext& ctx,
                                              long long samples, std::uint64_t seed) {
  if (std::abs(f.norm() - 1.0) > 1e-9)
    throw std::invalid_argument("fourth_moment_check: need ||f|| = 1");
  std::vector<double> w(static_cast<std::size_t>(samples));
  for (long long m = 0; m < samples; ++m) {
    SyntheticRow row{derive_seed(seed, kSeedPurposeEnergyRow, std::uint64_t(m)), ctx.law};
    w[std::size_t(m)] = update_log_ratio(f, ctx, row);
  }
  double mean = 0;
  for (double x : w) mean += x;
  mean /= double(samples);
  RunningStats fourth;
  for (double x : w) {
    double c = x - mean;
    fourth.add(c * c * c * c);
  }
  double bound = 160.0 * (std::exp(lambda(ctx.law, -ctx.beta)) +
                          std::exp(lambda(ctx.law, ctx.beta)));
  return {fourth.mean, fourth.stderror(), bound};
}

// ---------------------------------------------------------------------------
// Variational diagnostics

struct VariationalRow {
  std::uint64_t seed;
  double free_energy;   // F_n of the chain
  double lifted_r;      // R-hat over a subsample of mu_{n-1}
  double lifted_r_se;
  double diff;          // |lifted_r - F_n|
};

struct VariationalSummary {
  double lambda;
  double mean_f;
  double mean_lifted_r;
  std::vector<VariationalRow> rows;
};

inline VariationalSummary variational_gap(const UpdateContext& ctx, std::int64_t n,
                                          std::uint64_t base_seed, int num_seeds,
                                          std::size_t subsample_m = 64,
                                          long long samples_per_atom = 10000,
                                          std::size_t atom_cap = 256,
                                          const TruncationPolicy& trunc = TruncationPolicy{}) {
  VariationalSummary out;
  out.lambda = lambda(ctx.law, ctx.beta);
  double sf = 0, sr = 0;
  for (int s = 0; s < num_seeds; ++s) {
    std::uint64_t seed = derive_seed(base_seed, kSeedPurposeField, std::uint64_t(s));
    ChainTrajectory traj = run_chain(ctx, n, seed, trunc, atom_cap);
    double fn = traj.free_energy();
    EmpiricalMeasure mu = traj.subsample(std::size_t(n) - 1, subsample_m);
    Estimate lr = lifted_R(mu, ctx, samples_per_atom, mix64(seed, 0x52));
    out.rows.push_back({seed, fn, lr.value, lr.se, std::abs(lr.value - fn)});
    sf += fn;
    sr += lr.value;
  }
  out.mean_f = sf / num_seeds;
  out.mean_lifted_r = sr / num_seeds;
  return out;
}

}  // namespace polylab
