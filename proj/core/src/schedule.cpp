#include "bfwi/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bfwi/errors.hpp"

namespace bfwi {

double NoiseSchedule::beta_at_node(std::size_t node) const {
  if (node > n_steps) throw IndexError("beta_at_node: node out of range");
  if (node == 0) return beta.front();
  if (node == n_steps) return beta.back();
  return 0.5 * (beta[node - 1] + beta[node]);
}

NoiseSchedule schedule_from_beta(std::vector<double> beta, double horizon_T) {
  if (beta.empty()) throw ParameterError("schedule needs at least one step");
  if (!(horizon_T > 0.0)) throw ParameterError("schedule horizon must be positive");
  for (double b : beta) {
    if (!(b >= 0.0) || !std::isfinite(b)) throw ParameterError("beta must be finite and >= 0");
  }
  NoiseSchedule s;
  s.n_steps = beta.size();
  s.horizon_T = horizon_T;
  s.beta = std::move(beta);
  const double h = s.dt();

  // Both sides come from the same per-interval increments so that
  // fwd[i] + bwd[i] reproduces the total up to summation rounding.
  std::vector<double> inc(s.n_steps);
  for (std::size_t i = 0; i < s.n_steps; ++i) inc[i] = s.beta[i] * h;

  s.sigma2_fwd.assign(s.n_steps + 1, 0.0);
  for (std::size_t i = 0; i < s.n_steps; ++i) s.sigma2_fwd[i + 1] = s.sigma2_fwd[i] + inc[i];
  s.sigma2_bwd.assign(s.n_steps + 1, 0.0);
  for (std::size_t i = s.n_steps; i-- > 0;) s.sigma2_bwd[i] = s.sigma2_bwd[i + 1] + inc[i];
  return s;
}

NoiseSchedule make_symmetric_schedule(std::size_t n_steps, double beta_min, double beta_max,
                                      double horizon_T) {
  if (n_steps < 1) throw ParameterError("n_steps must be >= 1");
  if (!(horizon_T > 0.0)) throw ParameterError("horizon_T must be positive");
  if (!(beta_min > 0.0)) throw ParameterError("beta_min must be positive");
  if (beta_min > beta_max) throw ParameterError("beta_min must not exceed beta_max");

  std::vector<double> beta(n_steps);
  const double half = 0.5 * horizon_T;
  const double h = horizon_T / static_cast<double>(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) {
    // Mirror the index so the profile is exactly symmetric in floating point.
    const std::size_t k = std::min(i, n_steps - 1 - i);
    const double t = (static_cast<double>(k) + 0.5) * h;
    const double frac = std::min(t, half) / half;
    beta[i] = beta_min + (beta_max - beta_min) * frac;
  }
  return schedule_from_beta(std::move(beta), horizon_T);
}

NodeVariances variances_at(const NoiseSchedule& schedule, std::size_t node) {
  if (node > schedule.n_steps) {
    throw IndexError("variances_at: node " + std::to_string(node) + " outside [0, " +
                     std::to_string(schedule.n_steps) + "]");
  }
  return {schedule.sigma2_fwd[node], schedule.sigma2_bwd[node]};
}

CosineAlphaBar make_cosine_alphabar(std::size_t n_steps, double s_offset) {
  if (n_steps < 1) throw ParameterError("n_steps must be >= 1");
  if (!(s_offset >= 0.0)) throw ParameterError("cosine offset must be >= 0");
  constexpr double floor = 1e-5;
  auto f = [&](double u) {
    const double c = std::cos((u + s_offset) / (1.0 + s_offset) * std::numbers::pi / 2.0);
    return c * c;
  };
  const double f0 = f(0.0);
  CosineAlphaBar out;
  out.n_steps = n_steps;
  out.s_offset = s_offset;
  out.alpha_bar.resize(n_steps + 1);
  for (std::size_t i = 0; i <= n_steps; ++i) {
    const double u = static_cast<double>(i) / static_cast<double>(n_steps);
    // Affine lift onto [floor, 1] keeps the sequence strictly decreasing
    // where a hard clamp would flatten the last few entries.
    out.alpha_bar[i] = floor + (1.0 - floor) * std::clamp(f(u) / f0, 0.0, 1.0);
  }
  return out;
}

std::vector<std::size_t> sampling_subgrid(std::size_t n_steps, std::size_t nfe) {
  if (nfe < 1) throw ParameterError("nfe must be >= 1");
  if (nfe > n_steps) {
    throw ParameterError("nfe " + std::to_string(nfe) + " exceeds schedule steps " +
                         std::to_string(n_steps));
  }
  std::vector<std::size_t> nodes(nfe + 1);
  for (std::size_t j = 0; j <= nfe; ++j) {
    const double x = static_cast<double>(j) * static_cast<double>(n_steps) /
                     static_cast<double>(nfe);
    nodes[nfe - j] = static_cast<std::size_t>(std::llround(x));
  }
  return nodes;
}

}  // namespace bfwi
