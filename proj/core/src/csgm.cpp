#include "bfwi/csgm.hpp"

#include <cmath>

#include "bfwi/errors.hpp"

namespace bfwi {

CsgmState make_csgm_state(std::size_t seismic_channels, std::size_t n_steps, double s_offset) {
  return CsgmState{make_cosine_alphabar(n_steps, s_offset), CondLayout{seismic_channels}};
}

Field vp_forward_sample(const Field& c0, std::size_t node, const CsgmState& state, Rng& rng) {
  if (node > state.n_steps()) throw IndexError("vp_forward_sample: node out of range");
  const double abar = state.alpha_bar.alpha_bar[node];
  if (abar == 1.0) return c0;
  const double a = std::sqrt(abar);
  const double s = std::sqrt(1.0 - abar);
  Field out(c0.shape());
  auto o = out.values();
  auto x = c0.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = a * x[i] + s * standard_normal(rng);
  return out;
}

Field ddim_step(const Field& c_next, const Field& c0_hat, std::size_t node_next,
                std::size_t node, const CsgmState& state) {
  require_same_shape(c_next, c0_hat, "ddim_step");
  if (!(node < node_next) || node_next > state.n_steps()) {
    throw ParameterError("ddim_step: need node < node_next <= n_steps");
  }
  const double abar_next = state.alpha_bar.alpha_bar[node_next];
  const double abar = state.alpha_bar.alpha_bar[node];
  if (abar_next >= 1.0) return c0_hat;
  const double a_next = std::sqrt(abar_next);
  const double s_next = std::sqrt(1.0 - abar_next);
  const double a = std::sqrt(abar);
  const double s = std::sqrt(std::max(0.0, 1.0 - abar));
  Field out(c_next.shape());
  auto o = out.values();
  auto xn = c_next.values();
  auto x0 = c0_hat.values();
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double eps = (xn[i] - a_next * x0[i]) / s_next;
    o[i] = a * x0[i] + s * eps;
  }
  return out;
}

Field csgm_condition(const Field& d_obs, const Field& c_smooth, const CsgmState& state) {
  if (d_obs.channels() != state.cond_layout.seismic_channels) {
    throw ShapeError("csgm: seismogram has " + std::to_string(d_obs.channels()) +
                     " shots, layout expects " +
                     std::to_string(state.cond_layout.seismic_channels));
  }
  return concat_channels(d_obs, c_smooth);
}

Field csgm_sample(const Denoiser& denoiser, const Field& d_obs, const Field& c_smooth,
                  const CsgmState& state, const SamplingConfig& config) {
  const Field cond = csgm_condition(d_obs, c_smooth, state);
  const auto nodes = sampling_subgrid(state.n_steps(), config.nfe);
  Rng rng(config.seed);
  Field current = normal_field(c_smooth.shape(), rng);
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const Field c0_hat = denoiser.predict(current, nodes[j], cond);
    current = ddim_step(current, c0_hat, nodes[j], nodes[j + 1], state);
  }
  return current;
}

}  // namespace bfwi
