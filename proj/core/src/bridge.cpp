#include "bfwi/bridge.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "bfwi/errors.hpp"

namespace bfwi {

std::string to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::stochastic:
      return "stochastic";
    case SamplingMode::deterministic_mean:
      return "deterministic_mean";
    case SamplingMode::ot_ode:
      return "ot_ode";
  }
  return "unknown";
}

SamplingMode sampling_mode_from_string(const std::string& name) {
  if (name == "stochastic") return SamplingMode::stochastic;
  if (name == "deterministic_mean" || name == "deterministic") return SamplingMode::deterministic_mean;
  if (name == "ot_ode") return SamplingMode::ot_ode;
  throw ParameterError("unknown sampling mode '" + name + "'");
}

std::pair<double, double> posterior_weights(double sigma2_fwd, double sigma2_bwd) {
  const double w1 = sigma2_fwd / (sigma2_fwd + sigma2_bwd);
  return {1.0 - w1, w1};
}

GaussianParams sb_posterior(const Field& c0, const Field& c1, std::size_t node,
                            const NoiseSchedule& schedule) {
  require_same_shape(c0, c1, "sb_posterior");
  const auto [fwd, bwd] = variances_at(schedule, node);
  if (node == 0 || fwd == 0.0) return {c0, 0.0};
  if (node == schedule.n_steps || bwd == 0.0) return {c1, 0.0};
  const auto [w0, w1] = posterior_weights(fwd, bwd);
  return {lincomb(w0, c0, w1, c1), fwd * bwd / (fwd + bwd)};
}

Field sample_bridge_point(const Field& c0, const Field& c1, std::size_t node,
                          const NoiseSchedule& schedule, Rng& rng) {
  auto post = sb_posterior(c0, c1, node, schedule);
  if (post.var == 0.0) return std::move(post.mean);
  const double sd = std::sqrt(post.var);
  for (auto& v : post.mean.values()) v += sd * standard_normal(rng);
  return std::move(post.mean);
}

GaussianParams ddpm_posterior(const Field& c_next, const Field& c0_hat, std::size_t node_next,
                              std::size_t node, const NoiseSchedule& schedule) {
  require_same_shape(c_next, c0_hat, "ddpm_posterior");
  if (!(node < node_next) || node_next > schedule.n_steps) {
    throw ParameterError("ddpm_posterior: need 0 <= node < node_next <= n_steps, got node=" +
                         std::to_string(node) + " node_next=" + std::to_string(node_next));
  }
  const double alpha2 = schedule.sigma2_fwd[node];
  const double delta2 = schedule.sigma2_fwd[node_next] - alpha2;
  if (alpha2 == 0.0) return {c0_hat, 0.0};
  if (delta2 == 0.0) return {c_next, 0.0};
  const auto [w0, w1] = posterior_weights(delta2, alpha2);
  // w0 multiplies alpha2 / (alpha2 + delta2): the weight on c_next.
  return {lincomb(w1, c0_hat, w0, c_next), alpha2 * delta2 / (alpha2 + delta2)};
}

Field ddpm_posterior_step(const Field& c_next, const Field& c0_hat, std::size_t node_next,
                          std::size_t node, const NoiseSchedule& schedule, bool stochastic,
                          Rng& rng) {
  auto post = ddpm_posterior(c_next, c0_hat, node_next, node, schedule);
  if (!stochastic || post.var == 0.0) return std::move(post.mean);
  const double sd = std::sqrt(post.var);
  for (auto& v : post.mean.values()) v += sd * standard_normal(rng);
  return std::move(post.mean);
}

namespace {

std::atomic<bool> g_eta_warned{false};

Field zero_condition(const Denoiser& denoiser, const Field& d_obs, const Field& c_t) {
  if (!d_obs.empty()) return Field(d_obs.shape(), 0.0);
  return Field(denoiser.cond_channels(), c_t.height(), c_t.width(), 0.0);
}

}  // namespace

Field guided_prediction(const Denoiser& denoiser, const Field& c_t, std::size_t node,
                        const Field& d_obs, double eta) {
  if ((eta < 0.0 || eta > 1.0) && !g_eta_warned.exchange(true)) {
    std::cerr << "warning: guidance scale " << eta
              << " outside [0, 1]; extrapolating between conditional and unconditional\n";
  }
  if (eta == 1.0) return denoiser.predict(c_t, node, d_obs);
  const Field zeros = zero_condition(denoiser, d_obs, c_t);
  if (eta == 0.0) return denoiser.predict(c_t, node, zeros);
  const Field cond = denoiser.predict(c_t, node, d_obs);
  const Field uncond = denoiser.predict(c_t, node, zeros);
  return lincomb(eta, cond, 1.0 - eta, uncond);
}

Trajectory sample(const Denoiser& denoiser, const Field& c_smooth, const Field& d_obs,
                  const NoiseSchedule& schedule, const SamplingConfig& config) {
  if (config.mode == SamplingMode::ot_ode) {
    return ot_ode_trajectory(denoiser, c_smooth, d_obs, schedule, config);
  }
  const auto nodes = sampling_subgrid(schedule.n_steps, config.nfe);
  const bool stochastic = config.mode == SamplingMode::stochastic;
  Rng rng(config.seed);

  Trajectory traj;
  traj.states.reserve(nodes.size());
  Field current = c_smooth;
  traj.states.emplace_back(nodes.front(), current);
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const std::size_t node_next = nodes[j];
    const std::size_t node = nodes[j + 1];
    const Field c0_hat = guided_prediction(denoiser, current, node_next, d_obs, config.guidance_eta);
    current = ddpm_posterior_step(current, c0_hat, node_next, node, schedule, stochastic, rng);
    traj.states.emplace_back(node, current);
  }
  traj.final = current;
  return traj;
}

Trajectory ot_ode_trajectory(const Denoiser& denoiser, const Field& c_smooth,
                             const Field& d_obs, const NoiseSchedule& schedule,
                             const SamplingConfig& config) {
  const auto nodes = sampling_subgrid(schedule.n_steps, config.nfe);

  Trajectory traj;
  traj.states.reserve(nodes.size());
  Field current = c_smooth;
  traj.states.emplace_back(nodes.front(), current);
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const std::size_t node_next = nodes[j];
    const std::size_t node = nodes[j + 1];
    Field c0_hat = guided_prediction(denoiser, current, node_next, d_obs, config.guidance_eta);
    if (node == 0) {
      current = std::move(c0_hat);
    } else {
      const double sigma2 = schedule.sigma2_fwd[node_next];
      const double h = schedule.time_at(node_next) - schedule.time_at(node);
      const double rate = h * schedule.beta_at_node(node_next) / sigma2;
      // c <- c - h * (beta / sigma^2) * (c - c0_hat)
      current = lincomb(1.0 - rate, current, rate, c0_hat);
    }
    traj.states.emplace_back(node, current);
  }
  traj.final = current;
  return traj;
}

}  // namespace bfwi
