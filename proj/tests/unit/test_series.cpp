#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "ptloss/error.hpp"
#include "ptloss/series.hpp"

using namespace ptloss;

TEST_CASE("maclaurin_log examples") {
  CHECK(maclaurin_log(1.0, 1) == 0.0);
  CHECK(maclaurin_log(1.0, 77) == 0.0);
  CHECK(maclaurin_log(0.5, 3) == doctest::Approx(-(0.5 + 0.125 + 0.125 / 3.0)).epsilon(1e-15));
  CHECK(std::abs(maclaurin_log(0.9, 50) - std::log(0.9)) <= 1e-12);
  CHECK_THROWS_AS(maclaurin_log(0.0, 3), InvalidInput);
  CHECK_THROWS_AS(maclaurin_log(1.5, 3), InvalidInput);
  CHECK_THROWS_AS(maclaurin_log(0.5, 0), InvalidInput);
}

TEST_CASE("truncation_bound examples") {
  CHECK(truncation_bound(1.0, 4) == 0.0);
  CHECK(truncation_bound(0.5, 3) == doctest::Approx(0.03125).epsilon(1e-15));
  const double err = std::abs(std::log(0.5) - maclaurin_log(0.5, 3));
  CHECK(err == doctest::Approx(0.026480).epsilon(1e-4));
  CHECK(err <= truncation_bound(0.5, 3));
  CHECK(truncation_bound(0.1, 3) == doctest::Approx(0.6561 / 0.4).epsilon(1e-14));
}

TEST_CASE("Horner evaluation agrees with direct summation") {
  for (double x = 0.05; x <= 1.0; x += 0.05) {
    for (std::size_t m : {1u, 2u, 7u, 40u}) {
      CHECK(maclaurin_log(x, m) == doctest::Approx(oracle::maclaurin(x, m)).epsilon(1e-13));
    }
  }
}

TEST_CASE("partial sums decrease monotonically toward ln x") {
  for (double x = 0.05; x < 1.0; x += 0.05) {
    for (std::size_t m = 1; m < 60; ++m) CHECK(maclaurin_log(x, m + 1) <= maclaurin_log(x, m));
  }
  for (double x = 0.5; x <= 1.0; x += 0.01) CHECK(std::abs(maclaurin_log(x, 1000) - std::log(x)) <= 1e-9);
}

TEST_CASE("the truncation bound holds on the grid") {
  int violations = 0;
  for (int i = 5; i <= 100; ++i) {
    const double x = i / 100.0;
    for (std::size_t m = 1; m <= 100; ++m) {
      if (std::abs(std::log(x) - maclaurin_log(x, m)) > truncation_bound(x, m)) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("TruncatedLogSeries with perturbations") {
  const TruncatedLogSeries plain(3);
  CHECK(plain(0.5) == doctest::Approx(maclaurin_log(0.5, 3)).epsilon(1e-15));
  const TruncatedLogSeries perturbed(2, std::vector<double>{1.0, -0.5});
  // -(1 + 1) * 0.5 - (0.5 - 0.5) * 0.25
  CHECK(perturbed(0.5) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK_THROWS_AS(TruncatedLogSeries(2, std::vector<double>{1.0}), InvalidInput);
  CHECK_THROWS_AS(TruncatedLogSeries(0), InvalidInput);
}

TEST_CASE("required_order meets the tolerance") {
  for (double x : {0.3, 0.5, 0.9}) {
    const std::size_t m = required_order(x, 1e-8);
    CHECK(truncation_bound(x, m) <= 1e-8);
    if (m > 1) CHECK(truncation_bound(x, m - 1) > 1e-8);
  }
}
