#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ptloss/error.hpp"
#include "ptloss/proxy.hpp"

using namespace ptloss;

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("zero coefficients return the teacher") {
  Rng rng(41);
  for (const std::size_t c : {2u, 3u, 10u}) {
    for (int i = 0; i < 20; ++i) {
      const ProbVector t = testing::random_probs(rng, c);
      const auto sol = solve_proxy_example(t, PerturbationConfig::zero(c, 2));
      CHECK(sol.converged);
      CHECK(sol.iterations <= 2);
      CHECK(sol.residual_norm <= 1e-8);
      for (std::size_t k = 0; k < c; ++k) CHECK(std::abs(sol.proxy[k] - t[k]) <= 1e-8);
    }
  }
}

TEST_CASE("uniform teacher with tied coefficients stays uniform") {
  const auto sol = solve_proxy_example(ProbVector::uniform(4), PerturbationConfig::tied({1.5, -0.7, 3.0}));
  CHECK(sol.converged);
  for (const double v : sol.proxy) CHECK(v == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("binary example against the grid oracle") {
  const ProbVector t({0.8, 0.2});
  const PerturbationConfig cfg({{1.0}, {1.0}}, false);
  const auto sol = solve_proxy_example(t, cfg);
  REQUIRE(sol.converged);
  const auto grid = oracle::binary_proxy_grid({0.8, 0.2}, {{1.0}, {1.0}});
  CHECK(std::abs(sol.proxy[0] - grid.q0) <= 1e-4);
  CHECK(std::abs(oracle::pt({0.8, 0.2}, testing::as_vector(sol.proxy), {{1.0}, {1.0}}) - grid.value) <= 1e-6);
  // Stationarity: (q - t) = J^T h with h_c = t_c eps_c, in logit space.
  const double q0 = sol.proxy[0];
  const double residual = (q0 - 0.8) - q0 * (1.0 - q0) * (0.8 - 0.2);
  CHECK(std::abs(residual) <= 1e-8);
}

TEST_CASE("converged solutions are stationary local minima") {
  Rng rng(42);
  for (int i = 0; i < 40; ++i) {
    const std::size_t c = 2 + static_cast<std::size_t>(i % 4);
    const std::size_t order = 1 + static_cast<std::size_t>(i % 3);
    const auto eps = testing::random_eps(rng, c, order, 2.0);
    const ProbVector t = testing::random_probs(rng, c, 0.05, 1.0);
    const PerturbationConfig cfg(eps, false);
    const auto sol = solve_proxy_example(t, cfg);
    if (!sol.converged) continue;
    const ProxyObjective obj(t, cfg);
    const std::vector<double> z(sol.logits.values().begin(), sol.logits.values().end());
    CHECK(norm(obj.gradient(z)) <= 1e-8);
    const double g0 = obj.value(z);
    for (std::size_t k = 0; k < c; ++k) {
      for (const double d : {1e-3, -1e-3}) {
        auto zp = z;
        zp[k] += d;
        CHECK(obj.value(zp) >= g0 - 1e-9);
      }
    }
    const auto again = solve_proxy_example(t, cfg, {}, sol.logits);
    CHECK(again.converged);
    CHECK(again.iterations <= 2);
  }
}

TEST_CASE("objective derivatives match central differences") {
  Rng rng(43);
  for (int i = 0; i < 30; ++i) {
    const std::size_t c = 2 + static_cast<std::size_t>(i % 4);
    const auto eps = testing::random_eps(rng, c, 3, 3.0);
    const ProxyObjective obj(testing::random_probs(rng, c), PerturbationConfig(eps, false));
    const auto z = testing::random_logits(rng, c, 1.5);
    const auto fd = oracle::central_difference([&](const std::vector<double>& x) { return obj.value(x); }, z, 1e-6);
    CHECK(oracle::relative_error(obj.gradient(z), fd, 1e-3) <= 1e-6);
    const auto h = obj.hessian(z);
    for (std::size_t j = 0; j < c; ++j) {
      const auto col = oracle::central_difference(
          [&](const std::vector<double>& x) { return obj.gradient(x)[j]; }, z, 1e-5);
      std::vector<double> row(h.begin() + static_cast<long>(j * c), h.begin() + static_cast<long>((j + 1) * c));
      CHECK(oracle::relative_error(row, col, 1e-3) <= 1e-5);
    }
  }
}

TEST_CASE("batch solving") {
  const ProbVector t({0.6, 0.3, 0.1});
  const PerturbationConfig cfg({{0.5, 1.0}, {-0.3, 2.0}, {1.0, 0.0}}, false);
  const std::vector<ProbVector> same(5, t);
  const auto batch = solve_proxy_batch(same, cfg);
  CHECK(batch.converged_fraction == 1.0);
  for (const auto& s : batch.solutions) CHECK(s.proxy == batch.solutions.front().proxy);

  const std::vector<ProbVector> teachers{ProbVector({0.7, 0.2, 0.1}), ProbVector({0.1, 0.1, 0.8})};
  const auto zero = solve_proxy_batch(teachers, PerturbationConfig::zero(3, 1));
  for (std::size_t i = 0; i < teachers.size(); ++i)
    for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(zero.solutions[i].proxy[k] - teachers[i][k]) <= 1e-8);

  CHECK_THROWS_AS(solve_proxy_batch(std::vector<ProbVector>{}, cfg), InvalidInput);
}

TEST_CASE("a failing example does not affect the rest of its batch") {
  SolverConfig tight;
  tight.max_iterations = 1;
  const PerturbationConfig cfg = PerturbationConfig::tied({2.0, -1.0});
  const std::vector<ProbVector> teachers{ProbVector::uniform(3), ProbVector({0.7, 0.2, 0.1}), ProbVector::uniform(3)};
  const auto batch = solve_proxy_batch(teachers, cfg, tight);
  REQUIRE(batch.solutions.size() == 3);
  CHECK(batch.solutions[0].converged);
  CHECK(batch.solutions[2].converged);
  CHECK_FALSE(batch.solutions[1].converged);
  CHECK(batch.converged_fraction == doctest::Approx(2.0 / 3.0));
  const auto alone = solve_proxy_example(teachers[0], cfg, tight);
  CHECK(alone.proxy == batch.solutions[0].proxy);
}

TEST_CASE("solver configuration is validated") {
  SolverConfig bad;
  bad.tolerance = 0.0;
  CHECK_THROWS_AS(solve_proxy_example(ProbVector::uniform(2), PerturbationConfig{}, bad), ConfigError);
  bad = {};
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
