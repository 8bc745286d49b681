#include <random>

#include "doctest.h"
#include "mu/cost/cost_model.hpp"
#include "mu/error.hpp"
#include "oracles.hpp"

using namespace mu;

TEST_CASE("retrain cost examples") {
  const CostConfig cfg{1000, 4, 2000};
  CHECK(retrain_cost(4, cfg) == 1000.0);
  CHECK(retrain_cost(3, cfg) == 1750.0);
  CHECK(retrain_cost(1, cfg) == 2500.0);
  CHECK(retrain_cost(3, cfg) == oracle::brute_cost(1000, 4, 3));
  CHECK_THROWS_AS(retrain_cost(0, cfg), Error);
  CHECK_THROWS_AS(retrain_cost(5, cfg), Error);
}

TEST_CASE("threshold examples") {
  const auto mid = threshold({1000, 4, 2000});
  CHECK(mid.t == 3);
  CHECK(mid.r == 2);
  CHECK(mid.costs == std::vector<double>{2500, 2250, 1750, 1000});
  const auto all = threshold({1000, 4, 10000});
  CHECK(all.t == 1);
  CHECK(all.r == 4);
  const auto none = threshold({1000, 4, 500});
  CHECK(none.t == 5);
  CHECK(none.r == 0);
  CHECK(threshold({1000, 4, 2500}).t == 1);
  CHECK(threshold({1000, 4, 999.999}).t == 5);
}

TEST_CASE("depth override is clamped") {
  CHECK(threshold({1000, 4, 2000}, 1).r == 1);
  CHECK(threshold({1000, 4, 2000}, 9).r == 4);
  CHECK(threshold({1000, 4, 2000}, -3).r == 0);
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(threshold({3, 4, 0}), Error);
  CHECK_THROWS_AS(threshold({10, 0, 0}), Error);
  CHECK_THROWS_AS(threshold({10, 2, -1}), Error);
}

TEST_CASE("threshold agrees with a brute-force scan") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const int s = static_cast<int>(rng() % 64) + 1;
    const std::int64_t n = s + static_cast<std::int64_t>(rng() % 100000);
    const double top = oracle::brute_cost(n, s, 1);
    const double phi = std::uniform_real_distribution<double>(0.0, top * 1.2)(rng);
    const auto result = threshold({n, s, phi});
    const int t = oracle::brute_threshold(n, s, phi);
    REQUIRE(result.t == t);
    CHECK(result.r == (t <= s ? s - t + 1 : 0));
    for (int i = 1; i < s; ++i) CHECK(result.costs[static_cast<std::size_t>(i - 1)] > result.costs[static_cast<std::size_t>(i)]);
  }
}
