#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "polylab/random_instances.hpp"
#include "polylab/walk.hpp"

using namespace polylab;

TEST_CASE("srw construction") {
  auto p1 = StepDistribution::srw(1);
  REQUIRE(p1.pmf().size() == 2);
  CHECK(p1.pmf().at(vec1(-1)) == 0.5);
  CHECK(p1.pmf().at(vec1(1)) == 0.5);

  auto p2 = StepDistribution::srw(2);
  REQUIRE(p2.pmf().size() == 4);
  for (const auto& [z, q] : p2.pmf()) CHECK(q == 0.25);

  CHECK_THROWS_AS(StepDistribution::srw(0), std::invalid_argument);
  CHECK_THROWS_AS(StepDistribution::srw(4), std::invalid_argument);
}

TEST_CASE("entropy") {
  CHECK(StepDistribution::srw(1).entropy() == Catch::Approx(std::log(2)).epsilon(1e-14));
  CHECK(StepDistribution::srw(3).entropy() == Catch::Approx(std::log(6)).epsilon(1e-14));
  StepDistribution lazy(1, {{vec1(0), 0.9}, {vec1(1), 0.1}});
  CHECK(lazy.entropy() ==
        Catch::Approx(-0.9 * std::log(0.9) - 0.1 * std::log(0.1)).epsilon(1e-12));
}

TEST_CASE("power_law_1d") {
  auto single = StepDistribution::power_law_1d(2.5, 1);
  CHECK(single.pmf().at(vec1(1)) == Catch::Approx(0.5).margin(1e-15));

  auto p = StepDistribution::power_law_1d(2.0, 2);
  CHECK(p.pmf().at(vec1(1)) == Catch::Approx(0.4).epsilon(1e-12));
  CHECK(p.pmf().at(vec1(-1)) == Catch::Approx(0.4).epsilon(1e-12));
  CHECK(p.pmf().at(vec1(2)) == Catch::Approx(0.1).epsilon(1e-12));
  CHECK(p.max_step_prob() == Catch::Approx(0.4).epsilon(1e-12));

  double total = 0;
  for (const auto& [z, q] : p.pmf()) total += q;
  CHECK(total == Catch::Approx(1.0).margin(1e-12));

  CHECK_THROWS_AS(StepDistribution::power_law_1d(1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(StepDistribution::power_law_1d(2.0, 0), std::invalid_argument);
}

TEST_CASE("max_step_prob") {
  CHECK(StepDistribution::srw(1).max_step_prob() == 0.5);
  StepDistribution lazy(1, {{vec1(0), 0.9}, {vec1(1), 0.1}});
  CHECK(lazy.max_step_prob() == 0.9);
}

TEST_CASE("validation rejects bad pmfs") {
  CHECK_THROWS_AS(StepDistribution(1, {{vec1(0), 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(StepDistribution(1, {{vec1(0), 0.5}, {vec1(1), 0.4}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(StepDistribution(1, {{vec2(0, 1), 0.5}, {vec1(1), 0.5}}),
                  std::invalid_argument);
}

TEST_CASE("random walks are normalized, positive, and entropic") {
  CounterRng rng(11);
  for (int k = 0; k < 50; ++k) {
    StepDistribution P = random_walk_1d(rng);
    double total = 0;
    for (const auto& [z, q] : P.pmf()) {
      CHECK(q > 0);
      CHECK(q < 1);
      total += q;
    }
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
    CHECK(P.entropy() > 0);
  }
}

TEST_CASE("symmetric builders produce symmetric pmfs exactly") {
  for (int d = 1; d <= 3; ++d) {
    auto p = StepDistribution::srw(d);
    for (const auto& [z, q] : p.pmf()) CHECK(p.pmf().at(-z) == q);
  }
  auto pl = StepDistribution::power_law_1d(1.7, 9);
  for (const auto& [z, q] : pl.pmf()) CHECK(pl.pmf().at(-z) == q);
}

TEST_CASE("n-step marginal convolution") {
  auto p = StepDistribution::srw(1);
  auto m2 = p.n_step_marginal(2);
  CHECK(m2.at(vec1(0)) == Catch::Approx(0.5).margin(1e-15));
  CHECK(m2.at(vec1(2)) == Catch::Approx(0.25).margin(1e-15));
  CHECK(m2.at(vec1(-2)) == Catch::Approx(0.25).margin(1e-15));
}
