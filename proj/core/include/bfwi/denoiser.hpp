#pragma once

#include <cstddef>

#include "bfwi/schedule.hpp"
#include "bfwi/tensor.hpp"

namespace bfwi {

/// A c0-estimator: maps (c_t, node, conditioning) to a prediction of the clean
/// velocity model.
///
/// Implementations must be deterministic and callable concurrently through a
/// const reference. A conditioning stack of all zeros is the "no condition"
/// signal; an empty field is accepted as shorthand for it.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual Field predict(const Field& c_t, std::size_t node, const Field& cond) const = 0;

  /// Number of conditioning channels the estimator consumes (0 = none).
  virtual std::size_t cond_channels() const = 0;

  bool supports_conditioning() const { return cond_channels() > 0; }
};

/// Linear-Gaussian toy joint used to validate training and sampling:
///   c0 ~ N(prior_mean, prior_var),  c1 = c0 + noise_scale * zeta,
///   c_t ~ q(c_t | c0, c1) from the bridge posterior.
struct GaussianToyJoint {
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double noise_scale = 1.0;
};

/// Exact E[c0 | c_t] for the toy joint, applied entrywise.
class GaussianOracle final : public Denoiser {
 public:
  GaussianOracle(GaussianToyJoint joint, NoiseSchedule schedule);

  Field predict(const Field& c_t, std::size_t node, const Field& cond) const override;
  std::size_t cond_channels() const override { return 0; }

  /// Scalar version: E[c0 | c_t = x] at `node`.
  double conditional_mean(double x, std::size_t node) const;
  /// Regression slope Cov(c0, c_t) / Var(c_t) at `node`.
  double slope(std::size_t node) const;

  const GaussianToyJoint& joint() const noexcept { return joint_; }
  const NoiseSchedule& schedule() const noexcept { return schedule_; }

 private:
  GaussianToyJoint joint_;
  NoiseSchedule schedule_;
};

/// Estimator that always returns a fixed field; the ideal denoiser when the
/// true c0 is known.
class FixedDenoiser final : public Denoiser {
 public:
  explicit FixedDenoiser(Field answer, std::size_t cond_channels = 0)
      : answer_(std::move(answer)), cond_channels_(cond_channels) {}

  Field predict(const Field& c_t, std::size_t node, const Field& cond) const override;
  std::size_t cond_channels() const override { return cond_channels_; }

 private:
  Field answer_;
  std::size_t cond_channels_;
};

}  // namespace bfwi
