#include "doctest.h"

#include <cmath>

#include "bfwi/bridge.hpp"
#include "bfwi/errors.hpp"
#include "test_util.hpp"

using namespace bfwi;
using bfwi::testing::scalar;

namespace {

/// Two-step schedule with sigma2_fwd = {0, a, a + b}.
NoiseSchedule two_step(double a, double b) { return schedule_from_beta({2.0 * a, 2.0 * b}, 1.0); }

/// Denoiser whose answer depends only on whether conditioning is all zeros.
class SwitchDenoiser final : public Denoiser {
 public:
  SwitchDenoiser(double cond_value, double uncond_value) : c_(cond_value), u_(uncond_value) {}
  Field predict(const Field& c_t, std::size_t, const Field& cond) const override {
    bool zero = true;
    for (double v : cond.values()) zero = zero && v == 0.0;
    ++calls;
    return Field(c_t.shape(), zero ? u_ : c_);
  }
  std::size_t cond_channels() const override { return 1; }
  mutable int calls = 0;

 private:
  double c_, u_;
};

}  // namespace

TEST_CASE("posterior weights sum to one") {
  for (double a : {1e-8, 0.1, 1.0, 3.7}) {
    for (double b : {1e-6, 0.5, 2.0}) {
      const auto [w0, w1] = posterior_weights(a, b);
      CHECK(w0 + w1 == 1.0);
    }
  }
}

TEST_CASE("posterior worked example") {
  const auto s = two_step(1.0, 3.0);
  CHECK(variances_at(s, 1).fwd == doctest::Approx(1.0));
  CHECK(variances_at(s, 1).bwd == doctest::Approx(3.0));
  const auto p = sb_posterior(scalar(0.0), scalar(2.0), 1, s);
  CHECK(std::abs(p.mean[0] - 0.5) < 1e-12);
  CHECK(std::abs(p.var - 0.75) < 1e-12);
}

TEST_CASE("posterior with equal variances is the midpoint") {
  const auto s = two_step(0.4, 0.4);
  const auto p = sb_posterior(scalar(1.0), scalar(3.0), 1, s);
  CHECK(p.mean[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(p.var == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("posterior boundary collapse is exact") {
  const auto s = make_symmetric_schedule(100);
  const Field c0 = testing::random_field({1, 4, 4}, 1);
  const Field c1 = testing::random_field({1, 4, 4}, 2);
  const auto a = sb_posterior(c0, c1, 0, s);
  CHECK(a.mean == c0);
  CHECK(a.var == 0.0);
  const auto b = sb_posterior(c0, c1, 100, s);
  CHECK(b.mean == c1);
  CHECK(b.var == 0.0);
  Rng rng(5);
  CHECK(sample_bridge_point(c0, c1, 0, s, rng) == c0);
  CHECK(sample_bridge_point(c0, c1, 100, s, rng) == c1);
  CHECK_THROWS_AS(sb_posterior(c0, Field(1, 4, 5), 3, s), ShapeError);
}

TEST_CASE("posterior variance is below both constituents") {
  const auto s = make_symmetric_schedule(200);
  for (std::size_t n = 1; n < 200; n += 13) {
    const auto v = variances_at(s, n);
    const auto p = sb_posterior(scalar(0), scalar(0), n, s);
    CHECK(p.var <= std::min(v.fwd, v.bwd));
  }
}

TEST_CASE("bridge point empirical variance") {
  const auto s = two_step(1.0, 1.0);
  Rng rng(11);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = sample_bridge_point(scalar(0.0), scalar(0.0), 1, s, rng)[0];
  const auto m = testing::moments(xs);
  CHECK(m.var == doctest::Approx(0.5).epsilon(0.03));
  CHECK(std::abs(m.mean) < 3.0 * m.se());
}

TEST_CASE("ddpm posterior special cases") {
  const auto s = two_step(0.5, 0.5);
  const Field c_next = scalar(4.0);
  const Field c0_hat = scalar(1.0);
  const auto at0 = ddpm_posterior(c_next, c0_hat, 1, 0, s);
  CHECK(at0.mean == c0_hat);
  CHECK(at0.var == 0.0);
  // alpha^2 = delta^2 = 0.5 between nodes 1 and 2.
  const auto mid = ddpm_posterior(c_next, c0_hat, 2, 1, s);
  CHECK(mid.mean[0] == doctest::Approx(2.5).epsilon(1e-14));
  CHECK(mid.var == doctest::Approx(0.25).epsilon(1e-14));
  CHECK_THROWS_AS(ddpm_posterior(c_next, c0_hat, 1, 1, s), ParameterError);
  CHECK_THROWS_AS(ddpm_posterior(c_next, c0_hat, 1, 2, s), ParameterError);
  CHECK_THROWS_AS(ddpm_posterior(c_next, c0_hat, 3, 1, s), ParameterError);
  Rng rng(0);
  CHECK(ddpm_posterior_step(c_next, c0_hat, 2, 0, s, true, rng) == c0_hat);
}

TEST_CASE("recursive ddpm steps reproduce the bridge marginal") {
  // Linear sigma^2 in node: constant beta.
  const auto s = schedule_from_beta({0.25, 0.25, 0.25, 0.25}, 1.0);
  const Field c0 = scalar(-1.0);
  const Field cN = scalar(2.0);
  const std::size_t trials = 100000;
  std::vector<std::vector<double>> at(5, std::vector<double>(trials));
  Rng rng(2024);
  for (std::size_t k = 0; k < trials; ++k) {
    Field c = cN;
    for (std::size_t node = 4; node-- > 0;) {
      c = ddpm_posterior_step(c, c0, node + 1, node, s, true, rng);
      at[node][k] = c[0];
    }
  }
  for (std::size_t node = 1; node <= 3; ++node) {
    const auto want = sb_posterior(c0, cN, node, s);
    const auto got = testing::moments(at[node]);
    CHECK(std::abs(got.mean - want.mean[0]) < 3.0 * got.se());
    CHECK(got.var == doctest::Approx(want.var).epsilon(0.05));
  }
  for (double x : at[0]) CHECK(x == -1.0);
}

TEST_CASE("guided prediction endpoints and linearity") {
  SwitchDenoiser d(2.0, 0.0);
  const Field c_t = scalar(0.3);
  const Field d_obs = scalar(1.0);
  d.calls = 0;
  CHECK(guided_prediction(d, c_t, 1, d_obs, 1.0)[0] == 2.0);
  CHECK(d.calls == 1);
  d.calls = 0;
  CHECK(guided_prediction(d, c_t, 1, d_obs, 0.0)[0] == 0.0);
  CHECK(d.calls == 1);
  CHECK(guided_prediction(d, c_t, 1, d_obs, 0.5)[0] == 1.0);
  const double y0 = guided_prediction(d, c_t, 1, d_obs, 0.0)[0];
  const double yh = guided_prediction(d, c_t, 1, d_obs, 0.5)[0];
  const double y1 = guided_prediction(d, c_t, 1, d_obs, 1.0)[0];
  CHECK(yh - y0 == doctest::Approx(y1 - yh));
  CHECK(guided_prediction(d, c_t, 1, d_obs, 1.5)[0] == doctest::Approx(3.0));
  CHECK(guided_prediction(d, c_t, 1, Field{}, 0.0)[0] == 0.0);
}

TEST_CASE("one-step sampling collapses to the guided prediction") {
  const auto s = make_symmetric_schedule(100);
  SwitchDenoiser d(2.0, -1.0);
  for (auto mode : {SamplingMode::stochastic, SamplingMode::deterministic_mean, SamplingMode::ot_ode}) {
    SamplingConfig cfg;
    cfg.nfe = 1;
    cfg.mode = mode;
    cfg.guidance_eta = 0.25;
    const auto t = sample(d, scalar(9.0), scalar(1.0), s, cfg);
    CHECK(t.states.size() == 2);
    CHECK(t.final[0] == doctest::Approx(0.25 * 2.0 - 0.75));
  }
}

TEST_CASE("oracle denoiser yields the true model for any nfe") {
  const auto s = make_symmetric_schedule(1000);
  const Field c0 = testing::random_field({1, 8, 8}, 7);
  const Field c1 = testing::random_field({1, 8, 8}, 8);
  FixedDenoiser oracle(c0);
  for (std::size_t nfe : {1u, 2u, 5u, 50u, 1000u}) {
    SamplingConfig cfg;
    cfg.nfe = nfe;
    const auto t = sample(oracle, c1, Field{}, s, cfg);
    CHECK(t.states.size() == nfe + 1);
    CHECK(t.states.front().first == 1000);
    CHECK(t.states.back().first == 0);
    CHECK(t.states.front().second == c1);
    CHECK(t.final == c0);
  }
}

TEST_CASE("sampling is deterministic given the seed") {
  const auto s = make_symmetric_schedule(1000);
  const Field c0 = testing::random_field({1, 6, 6}, 1);
  const Field c1 = testing::random_field({1, 6, 6}, 2);
  FixedDenoiser oracle(c0);
  SamplingConfig cfg;
  cfg.nfe = 20;
  cfg.mode = SamplingMode::stochastic;
  cfg.seed = 77;
  const auto a = sample(oracle, c1, Field{}, s, cfg);
  const auto b = sample(oracle, c1, Field{}, s, cfg);
  for (std::size_t j = 0; j < a.states.size(); ++j) CHECK(a.states[j].second == b.states[j].second);
  cfg.seed = 78;
  const auto c = sample(oracle, c1, Field{}, s, cfg);
  CHECK(!(a.states[5].second == c.states[5].second));
}

TEST_CASE("OT-ODE matches its closed form with first-order convergence") {
  const auto s = make_symmetric_schedule(1024);
  const double x0 = 0.0;
  const double xN = 1.0;
  FixedDenoiser oracle(scalar(x0));
  auto max_dev = [&](std::size_t nfe) {
    SamplingConfig cfg;
    cfg.nfe = nfe;
    cfg.mode = SamplingMode::ot_ode;
    const auto t = ot_ode_trajectory(oracle, scalar(xN), Field{}, s, cfg);
    double dev = 0.0;
    for (const auto& [node, state] : t.states) {
      const double exact = x0 + s.sigma2_fwd[node] / s.total_variance() * (xN - x0);
      dev = std::max(dev, std::abs(state[0] - exact));
    }
    CHECK(t.final[0] == x0);
    return dev;
  };
  const double d16 = max_dev(16);
  const double d32 = max_dev(32);
  const double d64 = max_dev(64);
  CHECK(d16 > 0.0);
  CHECK(d16 / d32 == doctest::Approx(2.0).epsilon(0.2));
  CHECK(d32 / d64 == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("OT-ODE stays at a fixed point of the oracle") {
  const auto s = make_symmetric_schedule(100);
  const Field x0 = testing::random_field({1, 3, 3}, 4);
  FixedDenoiser oracle(x0);
  SamplingConfig cfg;
  cfg.nfe = 10;
  cfg.mode = SamplingMode::ot_ode;
  for (const auto& st : ot_ode_trajectory(oracle, x0, Field{}, s, cfg).states) {
    CHECK(testing::max_abs_diff(st.second, x0) < 1e-15);
  }
}

TEST_CASE("sampling mode names round-trip") {
  for (auto m : {SamplingMode::stochastic, SamplingMode::deterministic_mean, SamplingMode::ot_ode}) {
    CHECK(sampling_mode_from_string(to_string(m)) == m);
  }
  CHECK_THROWS_AS(sampling_mode_from_string("euler"), ParameterError);
}
