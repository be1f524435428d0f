#include "doctest.h"

#include <cmath>
#include <numbers>

#include "bfwi/acoustics.hpp"
#include "bfwi/errors.hpp"

using namespace bfwi;

namespace {

constexpr double kPi = std::numbers::pi;

VelocityField homogeneous(std::size_t h, std::size_t w, double v) {
  return make_velocity_field(Field(1, h, w, v), 10.0);
}

/// Single source at (depth, x) and receivers at the given columns on row rec_depth.
AcquisitionGeometry point_geometry(std::size_t depth, std::size_t x, std::vector<std::size_t> receivers,
                                   std::size_t rec_depth, std::size_t n_t, double dt = 1e-3) {
  AcquisitionGeometry g;
  PointSource s;
  s.x = x;
  s.depth = depth;
  g.sources = {s};
  g.receivers = std::move(receivers);
  g.receiver_depth = rec_depth;
  g.n_t = n_t;
  g.dt = dt;
  return g;
}

/// Index of the first sample whose magnitude exceeds 5% of the trace maximum.
std::size_t first_arrival(const std::vector<double>& trace) {
  double m = 0.0;
  for (double v : trace) m = std::max(m, std::abs(v));
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (std::abs(trace[i]) > 0.05 * m) return i;
  }
  return trace.size();
}

std::vector<double> column(const Field& record, std::size_t q) {
  std::vector<double> out(record.height());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = record(0, k, q);
  return out;
}

double ricker_derivative(double f, double tau) {
  const double a = kPi * kPi * f * f;
  return (-6.0 * a * tau + 4.0 * a * a * tau * tau * tau) * std::exp(-a * tau * tau);
}

/// Whole-space 2D pressure trace for a pressure-rate Ricker source:
/// p(t) ~ integral over tau > r/c of w'(t - tau) / sqrt(tau^2 - (r/c)^2), evaluated
/// with tau = (r/c) cosh(u) to remove the singularity.
std::vector<double> analytic_trace(double r, double c, double f, double delay, double dt, std::size_t n) {
  const double a = r / c;
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    if (t <= a) continue;
    const double umax = std::acosh(t / a);
    const std::size_t m = 4000;
    const double du = umax / m;
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double u = (i + 0.5) * du;
      acc += ricker_derivative(f, t - a * std::cosh(u) - delay);
    }
    out[k] = acc * du;
  }
  return out;
}

}  // namespace

TEST_CASE("ricker wavelet values") {
  CHECK(ricker(15.0, 0.3, 0.3) == 1.0);
  const double zero = 1.0 / (kPi * 15.0 * std::sqrt(2.0));
  CHECK(std::abs(ricker(15.0, zero, 0.0)) < 1e-12);
  CHECK(ricker(15.0, -zero, 0.0) == doctest::Approx(ricker(15.0, zero, 0.0)));
  CHECK(ricker(15.0, 0.04, 0.0) < 0.0);
  CHECK(PointSource{}.peak_frequency == 15.0);
  CHECK(PointSource{}.effective_delay() == doctest::Approx(0.1));
}

TEST_CASE("CFL limit") {
  Field v(1, 8, 8, 2000.0);
  v(0, 3, 3) = 4000.0;
  const auto f = make_velocity_field(v, 10.0);
  const auto c = check_cfl(f, 1e-3);
  CHECK(c.limit_dt == doctest::Approx(1.515e-3).epsilon(1e-12));
  CHECK(check_cfl(f, c.limit_dt / 2).stable);
  CHECK(!check_cfl(f, c.limit_dt * 2).stable);
  auto g = point_geometry(2, 4, {1, 2}, 1, 10, c.limit_dt * 2);
  try {
    simulate_shot(f, 0, g);
    FAIL("expected a CFL refusal");
  } catch (const CflError& e) {
    CHECK(e.limit_dt() == doctest::Approx(c.limit_dt));
  }
}

TEST_CASE("validation rejects bad fields and geometries") {
  CHECK_THROWS_AS(make_velocity_field(Field(1, 7, 8, 1000.0)), ParameterError);
  Field neg(1, 8, 8, 1000.0);
  neg[5] = -1.0;
  CHECK_THROWS_AS(make_velocity_field(neg), ParameterError);
  const auto f = homogeneous(8, 8, 1500.0);
  CHECK_THROWS_AS(validate(point_geometry(2, 8, {1}, 1, 10), f), ParameterError);
  CHECK_THROWS_AS(validate(point_geometry(2, 2, {9}, 1, 10), f), ParameterError);
  CHECK_THROWS_AS(validate(point_geometry(0, 2, {1}, 1, 10), f), ParameterError);
  CHECK_THROWS_AS(simulate_shot(f, 1, point_geometry(2, 2, {1}, 1, 10)), IndexError);
}

TEST_CASE("surface geometry") {
  const auto g = make_surface_geometry(70, 5);
  CHECK(g.sources.size() == 5);
  CHECK(g.sources.front().x == 0);
  CHECK(g.sources.back().x == 69);
  CHECK(g.sources[2].x == 35);
  CHECK(g.receivers.size() == 70);
  CHECK(g.sources[0].depth == 1);
  CHECK(make_surface_geometry(64, 1).sources[0].x == 32);
  auto d = make_surface_geometry(70, 5, 15.0, 1e-3, 1000, 4);
  CHECK(d.samples() == 250);
}

TEST_CASE("homogeneous first arrival follows distance over velocity") {
  // Receivers at the source depth, far from the free surface, so the direct
  // wave arrives first; the analytic whole-space trace supplies the pick offset
  // due to the wavelet shape.
  const double dt = 1e-3;
  const std::size_t n_t = 600;
  for (double c : {2000.0, 4000.0}) {
    const auto f = homogeneous(130, 110, c);
    const auto g = point_geometry(65, 15, {85}, 65, n_t, dt);
    const auto trace = column(simulate_shot(f, 0, g), 0);
    const auto oracle = analytic_trace(700.0, c, 15.0, 0.1, dt, n_t);
    const auto got = static_cast<double>(first_arrival(trace));
    const auto want = static_cast<double>(first_arrival(oracle));
    MESSAGE("c=" << c << " fdtd pick " << got << " analytic pick " << want << " d/c samples " << 700.0 / c / dt);
    CHECK(std::abs(got - want) <= 2.0);
  }
}

TEST_CASE("doubling velocity halves the travel time") {
  const double dt = 1e-3;
  auto pick = [&](double c, std::size_t offset_cells) {
    const auto f = homogeneous(130, 140, c);
    const auto g = point_geometry(65, 10, {10 + offset_cells}, 65, 700, dt);
    return static_cast<double>(first_arrival(column(simulate_shot(f, 0, g), 0)));
  };
  // Travel time as the pick difference between two offsets cancels the wavelet onset.
  const double t_slow = pick(2000.0, 110) - pick(2000.0, 30);
  const double t_fast = pick(4000.0, 110) - pick(4000.0, 30);
  CHECK(t_slow == doctest::Approx(800.0 / 2000.0 / dt).epsilon(0.05));
  CHECK(t_fast == doctest::Approx(t_slow / 2.0).epsilon(0.1));
}

TEST_CASE("zero amplitude source records nothing") {
  const auto f = homogeneous(32, 32, 1800.0);
  auto g = point_geometry(3, 10, {1, 5, 20}, 1, 200);
  g.sources[0].amplitude = 0.0;
  const auto r = simulate_shot(f, 0, g);
  for (double v : r.values()) CHECK(v == 0.0);
}

TEST_CASE("records scale linearly with source amplitude") {
  Field v(1, 48, 48, 2000.0);
  for (std::size_t i = 24; i < 48; ++i) {
    for (std::size_t j = 0; j < 48; ++j) v(0, i, j) = 3000.0;
  }
  const auto f = make_velocity_field(v);
  auto g = make_surface_geometry(48, 1, 15.0, 1e-3, 400);
  const auto a = simulate_shot(f, 0, g);
  g.sources[0].amplitude = 3.5;
  const auto b = simulate_shot(f, 0, g);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (b[i] - 3.5 * a[i]) * (b[i] - 3.5 * a[i]);
    den += b[i] * b[i];
  }
  CHECK(den > 0.0);
  CHECK(std::sqrt(num / den) < 1e-6);
}

TEST_CASE("reciprocity in a homogeneous medium") {
  const auto f = homogeneous(80, 80, 2200.0);
  const auto ab = column(simulate_shot(f, 0, point_geometry(10, 20, {55}, 40, 500)), 0);
  const auto ba = column(simulate_shot(f, 0, point_geometry(40, 55, {20}, 10, 500)), 0);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < ab.size(); ++i) {
    num += (ab[i] - ba[i]) * (ab[i] - ba[i]);
    den += ab[i] * ab[i];
  }
  CHECK(std::sqrt(num / den) < 0.01);
}

TEST_CASE("wavefield stays bounded for stable inputs") {
  Field v(1, 64, 64, 1500.0);
  for (std::size_t i = 32; i < 64; ++i) {
    for (std::size_t j = 0; j < 64; ++j) v(0, i, j) = 4500.0;
  }
  const auto f = make_velocity_field(v);
  const auto g = make_surface_geometry(64, 3, 15.0, 1e-3, 1000);
  const auto s = simulate_survey(f, g, 1);
  for (double x : s.data.values()) {
    CHECK(std::isfinite(x));
    CHECK(std::abs(x) < 1e3);
  }
}

TEST_CASE("layered kinematics match vertical ray travel time") {
  // Source near the top, receiver line deep, same column: vertical travel time
  // through two layers. Differences against a homogeneous run cancel the
  // wavelet onset.
  const std::size_t H = 120, W = 60;
  Field v(1, H, W, 2000.0);
  for (std::size_t i = 50; i < H; ++i) {
    for (std::size_t j = 0; j < W; ++j) v(0, i, j) = 3000.0;
  }
  const auto layered = make_velocity_field(v);
  const auto homog = homogeneous(H, W, 2000.0);
  const auto g = point_geometry(10, 30, {30}, 100, 600);
  const double dt = 1e-3;
  const double pick_layered = static_cast<double>(first_arrival(column(simulate_shot(layered, 0, g), 0)));
  const double pick_homog = static_cast<double>(first_arrival(column(simulate_shot(homog, 0, g), 0)));
  // Interfaces sit at cell boundaries between rows 49 and 50.
  const double t_layered = (49.5 - 10.0) * 10.0 / 2000.0 + (100.0 - 49.5) * 10.0 / 3000.0;
  const double t_homog = 90.0 * 10.0 / 2000.0;
  CHECK(std::abs((pick_layered - pick_homog) - (t_layered - t_homog) / dt) <= 3.0);
}

TEST_CASE("survey shape and shot independence") {
  const auto f = homogeneous(70, 70, 2500.0);
  const auto g = make_surface_geometry(70, 5, 15.0, 1e-3, 1000);
  const auto s = simulate_survey(f, g, 2);
  CHECK(s.data.shape() == Shape{5, 1000, 70});
  CHECK(s.dt_effective == 1e-3);

  auto rev = g;
  std::reverse(rev.sources.begin(), rev.sources.end());
  const auto r = simulate_survey(f, rev, 1);
  for (std::size_t k = 0; k < 5; ++k) {
    const auto a = s.data.channel(k);
    const auto b = r.data.channel(4 - k);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }

  auto one = g;
  one.sources.resize(1);
  CHECK(simulate_survey(f, one).data.shape() == Shape{1, 1000, 70});
}

TEST_CASE("record decimation keeps every k-th sample") {
  const auto f = homogeneous(40, 40, 2000.0);
  auto g = make_surface_geometry(40, 1, 15.0, 1e-3, 300, 1);
  const auto full = simulate_shot(f, 0, g);
  g.record_every = 3;
  const auto dec = simulate_shot(f, 0, g);
  CHECK(dec.height() == 100);
  for (std::size_t k = 0; k < 100; ++k) CHECK(dec(0, k, 7) == full(0, 3 * k, 7));
}
