#pragma once

#include <cstddef>
#include <vector>

namespace bfwi {

/// Discretized bridge noise schedule on a uniform grid of `n_steps` intervals
/// over [0, T].
///
/// `beta[i]` is the diffusion rate at the midpoint of interval i. The two
/// accumulated variances live on the n_steps + 1 grid nodes:
///   sigma2_fwd[i] = integral of beta over [0, t_i]
///   sigma2_bwd[i] = integral of beta over [t_i, T]
/// Both are midpoint Riemann sums, so sigma2_fwd[0] and sigma2_bwd[n] are
/// exactly zero.
struct NoiseSchedule {
  std::size_t n_steps = 0;
  double horizon_T = 1.0;
  std::vector<double> beta;
  std::vector<double> sigma2_fwd;
  std::vector<double> sigma2_bwd;

  double dt() const noexcept { return horizon_T / static_cast<double>(n_steps); }
  double time_at(std::size_t node) const noexcept {
    return horizon_T * static_cast<double>(node) / static_cast<double>(n_steps);
  }
  double total_variance() const noexcept { return sigma2_fwd.back(); }
  /// Point value of beta at a grid node (average of the adjacent midpoints).
  double beta_at_node(std::size_t node) const;
};

/// Build a schedule from an explicit midpoint beta profile.
NoiseSchedule schedule_from_beta(std::vector<double> beta, double horizon_T);

/// Triangular beta: beta_min at t = 0 and t = T, beta_max at T / 2.
NoiseSchedule make_symmetric_schedule(std::size_t n_steps = 1000, double beta_min = 1e-4,
                                      double beta_max = 0.3, double horizon_T = 1.0);

struct NodeVariances {
  double fwd;
  double bwd;
};

/// (sigma_t^2, bar-sigma_t^2) at a grid node. Throws IndexError out of range.
NodeVariances variances_at(const NoiseSchedule& schedule, std::size_t node);

/// Cumulative signal retention of the cosine VP schedule used by the cSGM baseline.
struct CosineAlphaBar {
  std::size_t n_steps = 0;
  double s_offset = 0.008;
  std::vector<double> alpha_bar;
};

CosineAlphaBar make_cosine_alphabar(std::size_t n_steps = 1000, double s_offset = 0.008);

/// Node indices of the sampling subgrid, from n_steps down to 0 inclusive.
///
/// Uniform subsampling with rounding; strictly decreasing with nfe + 1 entries.
std::vector<std::size_t> sampling_subgrid(std::size_t n_steps, std::size_t nfe);

}  // namespace bfwi
