#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "bfwi/denoiser.hpp"
#include "bfwi/random.hpp"
#include "bfwi/schedule.hpp"
#include "bfwi/tensor.hpp"

namespace bfwi {

/// Isotropic Gaussian N(mean, var * I).
struct GaussianParams {
  Field mean;
  double var = 0.0;
};

enum class SamplingMode { stochastic, deterministic_mean, ot_ode };

std::string to_string(SamplingMode mode);
SamplingMode sampling_mode_from_string(const std::string& name);

struct SamplingConfig {
  std::size_t nfe = 50;
  SamplingMode mode = SamplingMode::deterministic_mean;
  double guidance_eta = 1.0;
  std::uint64_t seed = 0;
};

struct Trajectory {
  /// (node, state) from the initial guess at n_steps down to node 0.
  std::vector<std::pair<std::size_t, Field>> states;
  Field final;
};

/// Mixing weights (w0 on c0, w1 on c1) of the bridge posterior mean at `node`.
/// The two weights sum to exactly one.
std::pair<double, double> posterior_weights(double sigma2_fwd, double sigma2_bwd);

/// Analytic bridge marginal q(c_t | c0, c1) with f = 0.
GaussianParams sb_posterior(const Field& c0, const Field& c1, std::size_t node,
                            const NoiseSchedule& schedule);

/// Draw c_t ~ q(c_t | c0, c1). Exact c0 / c1 at the two ends.
Field sample_bridge_point(const Field& c0, const Field& c1, std::size_t node,
                          const NoiseSchedule& schedule, Rng& rng);

/// Gaussian transition p(c_node | c0_hat, c_next) between two grid nodes
/// node < node_next.
GaussianParams ddpm_posterior(const Field& c_next, const Field& c0_hat, std::size_t node_next,
                              std::size_t node, const NoiseSchedule& schedule);

/// One backward step: the posterior mean, plus sqrt(var) * z when stochastic.
Field ddpm_posterior_step(const Field& c_next, const Field& c0_hat, std::size_t node_next,
                          std::size_t node, const NoiseSchedule& schedule, bool stochastic,
                          Rng& rng);

/// eta * c(c_t, node, d_obs) + (1 - eta) * c(c_t, node, 0).
///
/// The conditional call is skipped at eta == 0 and the unconditional one at
/// eta == 1. Values outside [0, 1] are allowed (extrapolated guidance) and
/// produce a one-time warning on stderr.
Field guided_prediction(const Denoiser& denoiser, const Field& c_t, std::size_t node,
                        const Field& d_obs, double eta);

/// Guided conditional bridge sampling from a smoothed model to an estimate of c0.
///
/// Starts at c_smooth on node n_steps and alternates guided prediction and a
/// DDPM-posterior step over the nfe-point uniform subgrid. `mode` selects
/// between stochastic steps, posterior means, and the OT-ODE integrator.
Trajectory sample(const Denoiser& denoiser, const Field& c_smooth, const Field& d_obs,
                  const NoiseSchedule& schedule, const SamplingConfig& config);

/// Explicit Euler integration of dc/dt = (beta_t / sigma_t^2)(c_t - c0_hat)
/// backwards in time on the subgrid. The last step to t = 0 returns the final
/// c0_hat, where the drift is singular.
Trajectory ot_ode_trajectory(const Denoiser& denoiser, const Field& c_smooth,
                             const Field& d_obs, const NoiseSchedule& schedule,
                             const SamplingConfig& config);

}  // namespace bfwi
