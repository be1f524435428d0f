#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "bfwi/errors.hpp"
#include "bfwi/schedule.hpp"

using namespace bfwi;

TEST_CASE("default schedule endpoints are exactly zero") {
  const auto s = make_symmetric_schedule(1000, 1e-4, 0.3, 1.0);
  CHECK(s.sigma2_fwd.size() == 1001);
  CHECK(s.sigma2_fwd[0] == 0.0);
  CHECK(s.sigma2_bwd[1000] == 0.0);
}

TEST_CASE("beta profile is mirror symmetric and peaks in the middle") {
  for (std::size_t n : {1u, 2u, 7u, 64u, 1000u}) {
    const auto s = make_symmetric_schedule(n, 0.01, 0.5, 2.0);
    for (std::size_t i = 0; i < n; ++i) CHECK(s.beta[i] == s.beta[n - 1 - i]);
    for (double b : s.beta) CHECK((b >= 0.01 && b <= 0.5));
  }
  const auto s = make_symmetric_schedule(1000, 1e-4, 0.3, 1.0);
  CHECK(s.beta.front() == doctest::Approx(1e-4).epsilon(0.01));
  CHECK(s.beta[499] == doctest::Approx(0.3).epsilon(0.01));
  CHECK(s.beta[0] < s.beta[250]);
  CHECK(s.beta[250] < s.beta[499]);
}

TEST_CASE("constant beta Riemann sums") {
  const auto s = make_symmetric_schedule(4, 0.01, 0.01, 1.0);
  CHECK(s.sigma2_fwd[4] == doctest::Approx(4 * 0.01 * 0.25).epsilon(1e-14));
  const auto v = variances_at(s, 2);
  CHECK(v.fwd == doctest::Approx(0.005).epsilon(1e-14));
  CHECK(v.bwd == doctest::Approx(0.005).epsilon(1e-14));
}

TEST_CASE("variances_at boundaries and range check") {
  const auto s = make_symmetric_schedule(10, 0.1, 0.2, 1.0);
  const auto a = variances_at(s, 0);
  CHECK(a.fwd == 0.0);
  CHECK(a.bwd == s.total_variance());
  const auto b = variances_at(s, 10);
  CHECK(b.fwd == s.total_variance());
  CHECK(b.bwd == 0.0);
  CHECK_THROWS_AS(variances_at(s, 11), IndexError);
}

TEST_CASE("accumulated variances are monotone and complementary") {
  const auto s = make_symmetric_schedule(1000, 1e-4, 0.3, 1.0);
  const double total = s.total_variance();
  const double tol = 1000 * std::numeric_limits<double>::epsilon() * total;
  for (std::size_t i = 0; i <= 1000; ++i) {
    if (i > 0) {
      CHECK(s.sigma2_fwd[i] >= s.sigma2_fwd[i - 1]);
      CHECK(s.sigma2_bwd[i] <= s.sigma2_bwd[i - 1]);
    }
    const auto v = variances_at(s, i);
    CHECK(std::abs(v.fwd + v.bwd - total) <= tol);
  }
}

TEST_CASE("refinement changes the total variance by under one percent") {
  for (std::size_t n : {10u, 100u, 1000u}) {
    const double a = make_symmetric_schedule(n, 1e-4, 0.3, 1.0).total_variance();
    const double b = make_symmetric_schedule(2 * n, 1e-4, 0.3, 1.0).total_variance();
    CHECK(std::abs(b - a) / a < 0.01);
  }
  // Triangle area: T * (beta_min + beta_max) / 2.
  const double exact = (1e-4 + 0.3) / 2.0;
  CHECK(make_symmetric_schedule(1000, 1e-4, 0.3, 1.0).total_variance() == doctest::Approx(exact).epsilon(1e-5));
}

TEST_CASE("invalid schedule parameters") {
  CHECK_THROWS_AS(make_symmetric_schedule(0, 0.1, 0.2, 1.0), ParameterError);
  CHECK_THROWS_AS(make_symmetric_schedule(4, 0.3, 0.2, 1.0), ParameterError);
  CHECK_THROWS_AS(make_symmetric_schedule(4, 0.0, 0.2, 1.0), ParameterError);
  CHECK_THROWS_AS(make_symmetric_schedule(4, 0.1, 0.2, 0.0), ParameterError);
  CHECK_THROWS_AS(schedule_from_beta({0.1, -1.0}, 1.0), ParameterError);
}

TEST_CASE("beta_at_node averages neighbouring midpoints") {
  const auto s = schedule_from_beta({1.0, 3.0, 5.0}, 3.0);
  CHECK(s.beta_at_node(0) == 1.0);
  CHECK(s.beta_at_node(1) == 2.0);
  CHECK(s.beta_at_node(2) == 4.0);
  CHECK(s.beta_at_node(3) == 5.0);
  CHECK(s.sigma2_fwd[3] == 9.0);
}

TEST_CASE("cosine alpha bar") {
  const auto c = make_cosine_alphabar(1000, 0.008);
  CHECK(c.alpha_bar.size() == 1001);
  CHECK(c.alpha_bar[0] == 1.0);
  for (std::size_t i = 1; i <= 1000; ++i) CHECK(c.alpha_bar[i] < c.alpha_bar[i - 1]);
  CHECK(c.alpha_bar[1000] > 0.0);
  CHECK(c.alpha_bar[1000] <= c.alpha_bar[500]);

  const auto two = make_cosine_alphabar(2, 0.008);
  const double s = 0.008;
  const double f0 = std::pow(std::cos(s / (1 + s) * std::numbers::pi / 2), 2);
  const double f1 = std::pow(std::cos((0.5 + s) / (1 + s) * std::numbers::pi / 2), 2);
  CHECK(two.alpha_bar[1] == doctest::Approx(f1 / f0).epsilon(1e-4));
  CHECK(two.alpha_bar[2] >= 1e-5);
}

TEST_CASE("sampling subgrid") {
  const auto g = sampling_subgrid(1000, 50);
  CHECK(g.size() == 51);
  CHECK(g.front() == 1000);
  CHECK(g.back() == 0);
  for (std::size_t j = 1; j < g.size(); ++j) CHECK(g[j] < g[j - 1]);
  CHECK(sampling_subgrid(1000, 1) == std::vector<std::size_t>{1000, 0});
  CHECK(sampling_subgrid(4, 4) == std::vector<std::size_t>{4, 3, 2, 1, 0});
  CHECK(sampling_subgrid(1000, 3).size() == 4);
  CHECK_THROWS_AS(sampling_subgrid(10, 0), ParameterError);
  CHECK_THROWS_AS(sampling_subgrid(10, 11), ParameterError);
}
