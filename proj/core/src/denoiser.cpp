#include "bfwi/denoiser.hpp"

#include "bfwi/bridge.hpp"
#include "bfwi/errors.hpp"

namespace bfwi {

GaussianOracle::GaussianOracle(GaussianToyJoint joint, NoiseSchedule schedule)
    : joint_(joint), schedule_(std::move(schedule)) {
  if (!(joint_.prior_var > 0.0)) throw ParameterError("oracle prior variance must be positive");
  if (!(joint_.noise_scale >= 0.0)) throw ParameterError("oracle noise scale must be >= 0");
}

double GaussianOracle::slope(std::size_t node) const {
  // c_t = w0 c0 + w1 c1 + sqrt(v) z with w0 + w1 = 1 and c1 = c0 + s zeta, so
  // c_t = c0 + w1 s zeta + sqrt(v) z. Then Cov(c0, c_t) = prior_var and
  // Var(c_t) = prior_var + w1^2 s^2 + v.
  const auto [fwd, bwd] = variances_at(schedule_, node);
  double w1 = 0.0;
  double v = 0.0;
  if (node == schedule_.n_steps) {
    w1 = 1.0;
  } else if (node > 0) {
    w1 = posterior_weights(fwd, bwd).second;
    v = fwd * bwd / (fwd + bwd);
  }
  const double s2 = joint_.noise_scale * joint_.noise_scale;
  return joint_.prior_var / (joint_.prior_var + w1 * w1 * s2 + v);
}

double GaussianOracle::conditional_mean(double x, std::size_t node) const {
  return joint_.prior_mean + slope(node) * (x - joint_.prior_mean);
}

Field GaussianOracle::predict(const Field& c_t, std::size_t node, const Field& /*cond*/) const {
  const double k = slope(node);
  Field out(c_t.shape());
  auto o = out.values();
  auto x = c_t.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = joint_.prior_mean + k * (x[i] - joint_.prior_mean);
  return out;
}

Field FixedDenoiser::predict(const Field& c_t, std::size_t /*node*/, const Field& /*cond*/) const {
  require_same_shape(c_t, answer_, "FixedDenoiser");
  return answer_;
}

}  // namespace bfwi
