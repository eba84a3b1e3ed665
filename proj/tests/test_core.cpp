#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "tva/core.hpp"
#include "tva/error.hpp"

using namespace tva;

namespace {

UtilityParams params(double tau, double a, double r, double T, double k, double d, double ro, double rm, double c) {
  return UtilityParams{tau, a, r, T, k, d, ro, rm, c};
}

SlaSpec spec(std::string name, double reward) { return SlaSpec{std::move(name), 1.0, Direction::UpperBound, 0.0, reward}; }

}  // namespace

TEST_SUITE("core") {
  TEST_CASE("utility examples") {
    CHECK(utility(params(1, 10, 0.5, 0.7, 20, 1, 2, 1, 1)) == doctest::Approx(20.0));
    CHECK(utility(params(1, 10, 0.9, 0.7, 20, 0.5, 2, 1, 1)) == doctest::Approx(-20.0));
    // 2*5*(0.25*4 + 0.75*2)/2
    CHECK(utility(params(2, 5, 0.6, 0.7, 10, 0.25, 4, 2, 2)) == doctest::Approx(12.5));
  }

  TEST_CASE("utility rejects non-positive cost and invalid params") {
    CHECK_THROWS_AS(utility(params(1, 10, 0.5, 0.7, 20, 1, 2, 1, 0)), ValidationError);
    CHECK_THROWS_AS(utility(params(1, 10, 0.5, 0.7, 20, 1, 2, 1, -1)), ValidationError);
    CHECK_THROWS_AS(utility(params(1, 10, 0.5, 0.7, 20, 1.5, 2, 1, 1)), ValidationError);
    CHECK_THROWS_AS(utility(params(0, 10, 0.5, 0.7, 20, 1, 2, 1, 1)), ValidationError);
  }

  TEST_CASE("utility properties on random parameters") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
      auto p = params(0.1 + 5 * u(rng), 30 * u(rng), 2 * u(rng), 2 * u(rng), 30 * u(rng), u(rng), 5 * u(rng),
                      5 * u(rng), 0.1 + 3 * u(rng));
      const double base = utility(p);

      // 1/s scaling in C.
      auto scaled = p;
      scaled.cost *= 4.0;
      CHECK(utility(scaled) == doctest::Approx(base / 4.0).epsilon(1e-12));

      if (p.responseTime > p.targetResponse && p.arrivalRate >= p.maxRate) CHECK(base == 0.0);

      if (p.responseTime <= p.targetResponse && p.dimmer > 0) {
        auto richer = p;
        richer.rewardOptional += 0.5;
        CHECK(utility(richer) >= base);
        // Continuity in d.
        auto nudged = p;
        nudged.dimmer = std::max(0.0, p.dimmer - 1e-9);
        const double slope = p.tau * p.arrivalRate * std::fabs(p.rewardOptional - p.rewardMandatory) / p.cost;
        CHECK(std::fabs(utility(nudged) - base) <= 1e-9 * slope + 1e-12 * std::fabs(base));
      }
    }
  }

  TEST_CASE("orderSpecsByReward") {
    const std::vector<SlaSpec> specs{spec("serverLoad", 7), spec("respTime", 10)};
    const auto ordered = orderSpecsByReward(specs);
    REQUIRE(ordered.size() == 2);
    CHECK(ordered[0].name == "respTime");
    CHECK(ordered[1].name == "serverLoad");

    CHECK(orderSpecsByReward(std::vector<SlaSpec>{}).empty());

    const std::vector<SlaSpec> tied{spec("a", 5), spec("b", 5)};
    const auto t = orderSpecsByReward(tied);
    CHECK(t[0].name == "a");
    CHECK(t[1].name == "b");
  }

  TEST_CASE("orderSpecsByReward is idempotent and length preserving") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> reward(0, 4);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<SlaSpec> specs;
      for (int i = 0; i < 8; ++i) specs.push_back(spec("s" + std::to_string(i), reward(rng)));
      const auto once = orderSpecsByReward(specs);
      const auto twice = orderSpecsByReward(once);
      REQUIRE(once.size() == specs.size());
      for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].name == twice[i].name);
      for (std::size_t i = 1; i < once.size(); ++i) CHECK(once[i - 1].reward >= once[i].reward);
    }
  }

  TEST_CASE("SlaSpec validation and violation direction") {
    CHECK_THROWS_AS((SlaSpec{"x", std::numeric_limits<double>::infinity(), Direction::UpperBound, 0, 0}.validate()),
                    ValidationError);
    CHECK_THROWS_AS((SlaSpec{"x", 1, Direction::UpperBound, -1, 0}.validate()), ValidationError);
    CHECK_THROWS_AS((SlaSpec{"x", 1, Direction::UpperBound, 0, -1}.validate()), ValidationError);
    const std::vector<SlaSpec> dup{spec("a", 1), spec("a", 2)};
    CHECK_THROWS_AS(validateSpecs(dup), ValidationError);

    const SlaSpec upper{"rt", 0.7, Direction::UpperBound, 0, 0};
    CHECK(upper.violatedBy(0.71));
    CHECK_FALSE(upper.violatedBy(0.7));
    const SlaSpec lower{"tput", 100, Direction::LowerBound, 0, 0};
    CHECK(lower.violatedBy(99));
    CHECK_FALSE(lower.violatedBy(100));
  }

  TEST_CASE("Tactic validation") {
    CHECK_NOTHROW((Tactic{"t", 2.0, 5.0, {"intercept", "x"}}.validate()));
    CHECK_THROWS_AS((Tactic{"t", -1.0, 5.0, {"intercept"}}.validate()), ValidationError);
    CHECK_THROWS_AS((Tactic{"t", 1.0, 5.0, {}}.validate()), ValidationError);
    CHECK_THROWS_AS((Tactic{"t", 1.0, 5.0, {"a", "a"}}.validate()), ValidationError);
  }

  TEST_CASE("TimeSeries invariants") {
    CHECK_THROWS_AS(TimeSeries({1.0, std::nan("")}), ValidationError);
    CHECK_THROWS_AS(TimeSeries({1.0}, 0.0), ValidationError);
    CHECK(TimeSeries({}, 6.0).empty());
    const TimeSeries s({1, 2, 3, 4}, 6.0);
    CHECK(s.head(2).size() == 2);
    CHECK(s.slice(1, 2)[0] == 2.0);
    CHECK(s.slice(1, 2).interval() == 6.0);
    CHECK_THROWS_AS(s.slice(3, 2), ValidationError);
  }
}
