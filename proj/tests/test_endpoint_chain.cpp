#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "polylab/chain.hpp"
#include "polylab/random_instances.hpp"

using namespace polylab;

namespace {

UpdateContext gauss_ctx(double beta = 0.5, double alpha = 2.0) {
  return UpdateContext(StepDistribution::srw(1), beta, EnvironmentLaw::gaussian(0, 1),
                       alpha);
}

}  // namespace

TEST_CASE("auto_alpha") {
  CHECK(auto_alpha(EnvironmentLaw::gaussian(0, 1), 3.0) == 2.0);
  CHECK(auto_alpha(EnvironmentLaw::uniform(-1, 1), 0.1) == 2.0);
  CHECK(auto_alpha(EnvironmentLaw::exponential(1), 0.5) == Catch::Approx(1.5).margin(1e-15));
  CHECK(auto_alpha(EnvironmentLaw::exponential(1), 0.2) == 2.0);
}

TEST_CASE("update context validation") {
  auto P = StepDistribution::srw(1);
  auto expo = EnvironmentLaw::exponential(1);
  CHECK_THROWS_AS(UpdateContext(P, 0.6, expo, 2.0), std::domain_error);  // 1.2 >= 1
  CHECK_THROWS_AS(UpdateContext(P, 0.5, expo, 1.0), std::domain_error);
  CHECK_THROWS_AS(UpdateContext(P, 0.0, expo, 1.5), std::domain_error);
  CHECK_NOTHROW(UpdateContext(P, 0.5, expo, 1.5));
}

TEST_CASE("zero element is an exact fixed point") {
  auto ctx = gauss_ctx();
  SyntheticRow row{12345, ctx.law};
  auto [next, lr] = apply_update(Pspm{}, ctx, row);
  CHECK(next.is_zero());
  CHECK(lr == lambda(ctx.law, ctx.beta));

  Estimate e = energy_R(Pspm{}, ctx, 100, 9);
  CHECK(e.value == lambda(ctx.law, ctx.beta));
  CHECK(e.se == 0.0);
}

TEST_CASE("update preserves the norm trichotomy") {
  CounterRng rng(515);
  auto ctx = gauss_ctx();
  for (int c = 0; c < 50; ++c) {
    double mass = 0.2 + 0.6 * rng.next_unit();  // strictly subprobability
    Pspm f = random_pspm(rng, 1, 5, 3, 4, mass);
    SyntheticRow row{rng.next_u64(), ctx.law};
    auto [next, lr] = apply_update(f, ctx, row);
    CHECK(next.norm() < 1.0);
    CHECK(next.norm() > 0.0);
    CHECK(std::isfinite(lr));
  }
  // unit mass stays unit mass (no slack, no truncation)
  Pspm f = point_mass();
  for (int i = 0; i < 20; ++i) {
    SyntheticRow row{std::uint64_t(1000 + i), ctx.law};
    f = apply_update(f, ctx, row).next;
    CHECK(f.norm() == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("chain and DP consume the same disorder") {
  CounterRng rng(626);
  for (int c = 0; c < 10; ++c) {
    StepDistribution P = random_walk_1d(rng, 3);
    double beta = 0.2 + 0.6 * rng.next_unit();
    UpdateContext ctx(P, beta, EnvironmentLaw::gaussian(0, 1), 2.0);
    std::uint64_t fseed = rng.next_u64();
    int n = 8;

    ChainTrajectory traj = run_chain(ctx, n, fseed, TruncationPolicy::off());

    SeededField field(fseed, ctx.law);
    PolymerState st = init_state();
    double sum_lr = 0;
    for (int i = 1; i <= n; ++i) {
      st = advance(st, P, field, beta, TruncationPolicy::off());
      sum_lr += traj.log_ratios[std::size_t(i) - 1];
      auto f = endpoint_distribution(st);
      const Pspm& chain_f = traj.states[std::size_t(i)];
      REQUIRE(chain_f.support_size() == f.size());
      for (const auto& [x, m] : f)
        CHECK(chain_f.at(Atom{1, x}) == Catch::Approx(m).margin(1e-10));
      CHECK(sum_lr == Catch::Approx(st.log_z).margin(1e-10));
    }
  }
}

TEST_CASE("translation coupling gives distance zero") {
  CounterRng rng(737);
  auto ctx = gauss_ctx(0.7);
  SeededField field(rng.next_u64(), ctx.law);
  for (int c = 0; c < 25; ++c) {
    Pspm f = random_pspm(rng, 1, 4, 1, 4, 0.9);  // single level
    Vec y = vec1(std::int32_t(rng.next_below(11)) - 5);
    Pspm fy = translate_level(f, 1, y);

    SeededField shifted = field.shift_view(0, y);
    EnvironmentRow row(field, 3);
    EnvironmentRow row_y(shifted, 3);
    auto a = apply_update(f, ctx, row_y);
    auto b = apply_update(fy, ctx, row);

    // identical up to summation order over the relabeled support
    CHECK(a.log_ratio == Catch::Approx(b.log_ratio).margin(1e-13));
    CHECK(translate_level(a.next, 1, y).support_size() == b.next.support_size());
    for (const auto& [u, m] : a.next.entries())
      CHECK(b.next.at(Atom{1, u.x + y}) == Catch::Approx(m).margin(1e-13));
    CHECK(d_alpha_upper(translate_level(a.next, 1, y), b.next, 2.0) < 1e-12);
  }
}

TEST_CASE("R is dominated by the annealed exponent") {
  auto ctx = gauss_ctx(0.8);
  double lam = lambda(ctx.law, ctx.beta);
  Estimate e = energy_R(point_mass(), ctx, 20000, 42);
  CHECK(e.value < lam + 3 * e.se);  // Jensen: E log D <= log E D = lambda
  CHECK(e.se > 0.0);
  CHECK_THROWS_AS(energy_R(point_mass(), ctx, 1, 42), std::invalid_argument);
}

TEST_CASE("negative moment of the normalizer") {
  auto ctx = gauss_ctx(0.5);
  Pspm f = embed({{vec1(0), 0.5}, {vec1(2), 0.5}});
  RunningStats inv;
  for (int m = 0; m < 20000; ++m) {
    SyntheticRow row{derive_seed(77, 5, std::uint64_t(m)), ctx.law};
    inv.add(std::exp(-ctx.alpha * update_log_ratio(f, ctx, row)));
  }
  // E D^{-alpha} <= e^{lambda(-alpha beta)} for unit-norm f
  CHECK(inv.mean < std::exp(lambda(ctx.law, -ctx.alpha * ctx.beta)) + 3 * inv.stderror());
}

TEST_CASE("fourth moment of log D stays under the closed-form bound") {
  auto ctx = gauss_ctx(0.5);
  auto res = fourth_moment_check(point_mass(), ctx, 20000, 88);
  double lam_sym = std::exp(lambda(ctx.law, -ctx.beta)) + std::exp(lambda(ctx.law, ctx.beta));
  CHECK(res.bound == Catch::Approx(160.0 * lam_sym).margin(1e-12));
  CHECK(res.estimate + 3 * res.se < res.bound);
  CHECK(res.estimate > 0.0);

  // beta -> 0: fluctuations of log D are O(beta), the 4th moment O(beta^4)
  auto tiny = gauss_ctx(1e-3);
  auto res0 = fourth_moment_check(point_mass(), tiny, 5000, 88);
  CHECK(res0.estimate < 1e-9);

  Pspm half = embed({{vec1(0), 0.5}});
  CHECK_THROWS_AS(fourth_moment_check(half, ctx, 100, 1), std::invalid_argument);
}

TEST_CASE("lifted R averages atomwise") {
  auto ctx = gauss_ctx();
  EmpiricalMeasure zeros({Pspm{}, Pspm{}, Pspm{}});
  Estimate e = lifted_R(zeros, ctx, 10, 5);
  CHECK(e.value == lambda(ctx.law, ctx.beta));
  CHECK(e.se == 0.0);

  EmpiricalMeasure mixed({Pspm{}, point_mass()});
  Estimate m = lifted_R(mixed, ctx, 2000, 5);
  Estimate pm = energy_R(point_mass(), ctx, 2000, mix64(5, 1));
  CHECK(m.value == Catch::Approx((lambda(ctx.law, ctx.beta) + pm.value) / 2).margin(1e-12));
}

TEST_CASE("trajectory bookkeeping") {
  auto ctx = gauss_ctx();
  ChainTrajectory traj = run_chain(ctx, 16, 99, TruncationPolicy::off());
  REQUIRE(traj.states.size() == 17);
  REQUIRE(traj.log_ratios.size() == 16);
  double s = 0;
  for (double r : traj.log_ratios) s += r;
  CHECK(traj.free_energy() == Catch::Approx(s / 16).margin(1e-15));

  auto sub = traj.subsample(16, 4);
  CHECK(sub.atoms.size() == 4);
  CHECK(sub.atoms[0] == traj.states[0]);
  CHECK_THROWS_AS(traj.subsample(2, 10), std::invalid_argument);
  CHECK_THROWS_AS(ChainTrajectory{}.free_energy(), std::domain_error);

  // store_cap bounds every snapshot
  ChainTrajectory capped = run_chain(ctx, 16, 99, TruncationPolicy::off(), 3);
  for (const Pspm& f : capped.states) CHECK(f.support_size() <= 3);
}

TEST_CASE("stationarity gap") {
  auto ctx = gauss_ctx();
  Pspm zero;
  ChainTrajectory frozen = run_chain(ctx, 12, 5, TruncationPolicy::off(),
                                     std::size_t(-1), &zero);
  CHECK(stationarity_gap(frozen, ctx, 4, 7) == 0.0);  // 0 is a fixed point

  ChainTrajectory traj = run_chain(ctx, 12, 5, TruncationPolicy::off());
  double gap = stationarity_gap(traj, ctx, 4, 7, 8);
  CHECK(gap >= 0.0);
  CHECK(std::isfinite(gap));
}

TEST_CASE("variational diagnostic rows are self-consistent") {
  auto ctx = gauss_ctx();
  auto sum = variational_gap(ctx, 8, 1234, 2, 4, 200, 16, TruncationPolicy::off());
  CHECK(sum.lambda == lambda(ctx.law, ctx.beta));
  REQUIRE(sum.rows.size() == 2);
  double sf = 0;
  for (const auto& row : sum.rows) {
    CHECK(row.diff == Catch::Approx(std::abs(row.lifted_r - row.free_energy)).margin(1e-15));
    sf += row.free_energy;
  }
  CHECK(sum.mean_f == Catch::Approx(sf / 2).margin(1e-15));
}

TEST_CASE("synthetic rows are pure functions of their key") {
  SyntheticRow r1{42, EnvironmentLaw::gaussian(0, 1)};
  SyntheticRow r2{42, EnvironmentLaw::gaussian(0, 1)};
  SyntheticRow r3{43, EnvironmentLaw::gaussian(0, 1)};
  CHECK(r1(2, vec1(5)) == r2(2, vec1(5)));
  CHECK(r1(2, vec1(5)) != r3(2, vec1(5)));
}
