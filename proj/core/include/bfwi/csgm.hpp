#pragma once

#include <cstddef>

#include "bfwi/bridge.hpp"
#include "bfwi/denoiser.hpp"
#include "bfwi/random.hpp"
#include "bfwi/schedule.hpp"

namespace bfwi {

/// Conditioning stack of the cSGM baseline: shots first, then the smoothed model.
struct CondLayout {
  std::size_t seismic_channels = 5;
  std::size_t total() const noexcept { return seismic_channels + 1; }
};

struct CsgmState {
  CosineAlphaBar alpha_bar;
  CondLayout cond_layout;

  std::size_t n_steps() const noexcept { return alpha_bar.n_steps; }
};

CsgmState make_csgm_state(std::size_t seismic_channels, std::size_t n_steps = 1000,
                          double s_offset = 0.008);

/// sqrt(abar) * c0 + sqrt(1 - abar) * z.
Field vp_forward_sample(const Field& c0, std::size_t node, const CsgmState& state, Rng& rng);

/// Deterministic DDIM update (sigma_t = 0) from node_next to node using a
/// c0 prediction; the noise direction is recovered from c_next.
Field ddim_step(const Field& c_next, const Field& c0_hat, std::size_t node_next,
                std::size_t node, const CsgmState& state);

/// [d_obs; c_smooth] stacked along channels.
Field csgm_condition(const Field& d_obs, const Field& c_smooth, const CsgmState& state);

/// DDIM sampling from pure noise, conditioned on the seismogram and the
/// smoothed model through the denoiser's conditioning channels only.
Field csgm_sample(const Denoiser& denoiser, const Field& d_obs, const Field& c_smooth,
                  const CsgmState& state, const SamplingConfig& config);

}  // namespace bfwi
