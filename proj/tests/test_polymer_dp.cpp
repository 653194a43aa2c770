#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "polylab/dp.hpp"
#include "polylab/random_instances.hpp"

using namespace polylab;

namespace {

EnvironmentLaw random_law(CounterRng& rng) {
  switch (rng.next_below(4)) {
    case 0: return EnvironmentLaw::gaussian(rng.next_unit() - 0.5, 0.5 + rng.next_unit());
    case 1: return EnvironmentLaw::exponential(1.0 + rng.next_unit());
    case 2: return EnvironmentLaw::bernoulli(0.2 + 0.6 * rng.next_unit(), -1, 1);
    default: return EnvironmentLaw::uniform(-1, 1);
  }
}

PolymerState run_dp(const StepDistribution& P, const SeededField& field, double beta,
                    int n, const TruncationPolicy& trunc) {
  PolymerState st = init_state();
  for (int i = 0; i < n; ++i) st = advance(st, P, field, beta, trunc);
  return st;
}

}  // namespace

TEST_CASE("DP matches exact path enumeration on random instances") {
  CounterRng rng(101);
  for (int c = 0; c < 50; ++c) {
    StepDistribution P = random_walk_1d(rng);
    EnvironmentLaw law = random_law(rng);
    double beta = 0.1 + 0.7 * rng.next_unit();  // < beta_max for all laws above
    int n = 2 + int(rng.next_below(5));
    SeededField field(rng.next_u64(), law);

    PolymerState st = run_dp(P, field, beta, n, TruncationPolicy::off());
    double oracle = brute_force_log_Z(P, field, beta, n);
    CHECK(st.log_z == Catch::Approx(oracle).margin(1e-10));

    auto exact = brute_force_endpoint_log_Z(P, field, beta, n);
    REQUIRE(st.log_weights.size() == exact.size());
    for (const auto& [k, lw] : st.log_weights) {
      auto it = exact.find(unpack_site(k));
      REQUIRE(it != exact.end());
      CHECK(lw == Catch::Approx(it->second).margin(1e-10));
    }
  }
}

TEST_CASE("shift identity residual vanishes") {
  CounterRng rng(202);
  for (int c = 0; c < 20; ++c) {
    StepDistribution P = random_walk_1d(rng, 3);
    EnvironmentLaw law = random_law(rng);
    double beta = 0.1 + 0.6 * rng.next_unit();
    SeededField field(rng.next_u64(), law);
    int n = 3 + int(rng.next_below(3));
    int k = int(rng.next_below(std::uint64_t(n) + 1));
    CHECK(shift_identity_check(P, field, beta, n, k) < 1e-10);
  }
}

TEST_CASE("beta -> 0 recovers the reference walk marginal") {
  auto P = StepDistribution::power_law_1d(2.0, 2);
  SeededField field(7, EnvironmentLaw::uniform(-1, 1));  // bounded disorder
  int n = 12;
  PolymerState st = run_dp(P, field, 1e-12, n, TruncationPolicy::off());
  auto f = endpoint_distribution(st);
  auto marginal = P.n_step_marginal(n);
  double tv = 0;
  for (const auto& [x, q] : marginal) tv += std::abs(f.at(x) - q);
  CHECK(tv / 2 < 1e-9);
}

TEST_CASE("endpoint mass conservation with and without truncation") {
  CounterRng rng(303);
  StepDistribution P = StepDistribution::srw(1);
  SeededField field(rng.next_u64(), EnvironmentLaw::gaussian(0, 1));
  double beta = 1.5;

  PolymerState exact_st = run_dp(P, field, beta, 30, TruncationPolicy::off());
  double total = 0;
  for (const auto& [x, q] : endpoint_distribution(exact_st)) total += q;
  CHECK(total == Catch::Approx(1.0).margin(1e-12));
  CHECK(exact_st.dropped_mass() == 0.0);

  TruncationPolicy trunc;  // defaults: tau_rel = 1e-14
  PolymerState tr_st = run_dp(P, field, beta, 30, trunc);
  double tr_total = 0;
  for (const auto& [x, q] : endpoint_distribution(tr_st)) tr_total += q;
  CHECK(tr_total == Catch::Approx(1.0 - tr_st.dropped_mass()).margin(1e-12));
  CHECK(tr_st.dropped_mass() >= 0.0);
  CHECK(tr_st.log_z == Catch::Approx(exact_st.log_z).margin(1e-8));

  double norm_total = 0;
  for (const auto& [x, q] : endpoint_distribution_normalized(tr_st)) norm_total += q;
  CHECK(norm_total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("max_support cap is respected and accounted") {
  TruncationPolicy trunc;
  trunc.max_support = 5;
  StepDistribution P = StepDistribution::srw(1);
  SeededField field(9, EnvironmentLaw::gaussian(0, 1));
  PolymerState st = run_dp(P, field, 0.5, 20, trunc);
  CHECK(st.log_weights.size() <= 5);
  CHECK(st.dropped_mass() > 0.0);
  double total = 0;
  for (const auto& [x, q] : endpoint_distribution(st)) total += q;
  CHECK(total == Catch::Approx(1.0 - st.dropped_mass()).margin(1e-12));
}

TEST_CASE("one-step closed form") {
  StepDistribution P = StepDistribution::power_law_1d(2.0, 2);
  SeededField field(17, EnvironmentLaw::gaussian(0.2, 1.1));
  double beta = 0.8;
  PolymerState st = advance(init_state(), P, field, beta, TruncationPolicy::off());
  std::vector<double> terms;
  for (const auto& [z, q] : P.pmf())
    terms.push_back(std::log(q) + beta * field.evaluate(1, z));
  CHECK(st.log_z == Catch::Approx(log_sum_exp(terms)).margin(1e-13));
}

TEST_CASE("annealed mean: E Z_n ~ exp(n lambda)") {
  auto law = EnvironmentLaw::gaussian(0, 1);
  StepDistribution P = StepDistribution::srw(1);
  double beta = 0.5;
  int n = 4;
  RunningStats zstats;
  for (int s = 0; s < 2000; ++s) {
    SeededField field(derive_seed(4444, 1, std::uint64_t(s)), law);
    PolymerState st = run_dp(P, field, beta, n, TruncationPolicy::off());
    zstats.add(std::exp(st.log_z));
  }
  double target = std::exp(n * lambda(law, beta));
  CHECK(std::abs(zstats.mean - target) < 4 * zstats.stderror());
}

TEST_CASE("domain errors") {
  StepDistribution P = StepDistribution::srw(1);
  SeededField field(1, EnvironmentLaw::exponential(1));
  CHECK_THROWS_AS(free_energy(init_state()), std::domain_error);
  CHECK_THROWS_AS(advance(init_state(), P, field, 0.0), std::domain_error);
  CHECK_THROWS_AS(advance(init_state(), P, field, -0.5), std::domain_error);
  CHECK_THROWS_AS(advance(init_state(), P, field, 1.0), std::domain_error);
  CHECK_THROWS_AS(shift_identity_check(P, field, 0.5, 3, 4), std::invalid_argument);
  CHECK_THROWS_AS(brute_force_log_Z(P, field, 0.5, 40), std::length_error);
}

TEST_CASE("checkpoint grid") {
  CHECK(checkpoint_grid(10) == std::vector<std::int64_t>{1, 2, 4, 8, 10});
  CHECK(checkpoint_grid(8) == std::vector<std::int64_t>{1, 2, 4, 8});
  CHECK(checkpoint_grid(1) == std::vector<std::int64_t>{1});
}

TEST_CASE("replica summary respects the annealed bound") {
  auto law = EnvironmentLaw::exponential(1);
  auto P = StepDistribution::srw(1);
  auto res = run_replicas(law, P, 0.5, 200, 31337, 8);
  REQUIRE(res.seeds.size() == 8);
  REQUIRE(res.per_seed.size() == 8);
  CHECK(res.summary.lambda == Catch::Approx(-std::log(0.5)).epsilon(1e-12));
  CHECK(res.summary.gap == Catch::Approx(res.summary.lambda - res.summary.mean_f).margin(1e-15));
  // Jensen: E F_n <= lambda
  CHECK(res.summary.mean_f < res.summary.lambda + 3 * res.summary.se_f);
  // deterministic reruns agree exactly
  auto res2 = run_replicas(law, P, 0.5, 200, 31337, 8);
  CHECK(res2.summary.mean_f == res.summary.mean_f);
}
