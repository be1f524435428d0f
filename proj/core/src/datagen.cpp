#include "bfwi/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bfwi/errors.hpp"

namespace bfwi {

ModelFamily family_preset(const std::string& name) {
  ModelFamily f;
  if (name == "flatvel") {
    f.kind = FamilyKind::flat_layers;
    f.layer_count_range = {2, 8};
  } else if (name == "curvevel") {
    f.kind = FamilyKind::curved_layers;
    f.layer_count_range = {2, 8};
  } else if (name == "flatfault") {
    f.kind = FamilyKind::flat_fault;
    f.layer_count_range = {3, 8};
  } else if (name == "curvefault") {
    f.kind = FamilyKind::curved_fault;
    f.layer_count_range = {3, 8};
  } else if (name == "stylelike") {
    f.kind = FamilyKind::style_like;
  } else {
    throw ParameterError("unknown model family '" + name +
                         "' (expected flatvel, curvevel, flatfault, curvefault, stylelike)");
  }
  return f;
}

std::string family_name(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::flat_layers:
      return "flatvel";
    case FamilyKind::curved_layers:
      return "curvevel";
    case FamilyKind::flat_fault:
      return "flatfault";
    case FamilyKind::curved_fault:
      return "curvefault";
    case FamilyKind::style_like:
      return "stylelike";
  }
  return "unknown";
}

FamilyKind family_kind_from_string(const std::string& name) { return family_preset(name).kind; }

void validate(const ModelFamily& f) {
  if (!(f.velocity_range.first > 0.0)) throw ParameterError("v_min must be positive");
  if (f.velocity_range.first > f.velocity_range.second) throw ParameterError("empty velocity range");
  if (f.layer_count_range.first < 1 || f.layer_count_range.first > f.layer_count_range.second) {
    throw ParameterError("invalid layer count range");
  }
  if (f.fault_throw_range.first < 0 || f.fault_throw_range.first > f.fault_throw_range.second) {
    throw ParameterError("invalid fault throw range");
  }
  if (f.curvature_amplitude < 0.0) throw ParameterError("curvature amplitude must be >= 0");
  if (f.jitter_fraction < 0.0 || f.jitter_fraction > 0.5) {
    throw ParameterError("jitter fraction must lie in [0, 0.5]");
  }
}

namespace {

/// Depth (row coordinate) of each interface as a function of column.
struct Interface {
  double base = 0.0;
  std::vector<double> amp, freq, phase;

  double depth(double x, double width) const {
    double z = base;
    for (std::size_t m = 0; m < amp.size(); ++m) {
      z += amp[m] * std::sin(2.0 * std::numbers::pi * freq[m] * x / width + phase[m]);
    }
    return z;
  }
};

GeneratedModel layered(const ModelFamily& fam, std::size_t H, std::size_t W, Rng& rng,
                       double dx, bool curved) {
  const auto [vmin, vmax] = fam.velocity_range;
  const int n_layers =
      static_cast<int>(uniform_int(rng, fam.layer_count_range.first, fam.layer_count_range.second));

  std::vector<double> means(static_cast<std::size_t>(n_layers));
  for (auto& m : means) m = uniform_real(rng, vmin, vmax);
  std::sort(means.begin(), means.end());

  std::vector<Interface> interfaces(static_cast<std::size_t>(n_layers - 1));
  std::vector<double> bases(interfaces.size());
  for (auto& b : bases) b = uniform_real(rng, 1.0, static_cast<double>(H) - 1.0);
  std::sort(bases.begin(), bases.end());
  for (std::size_t k = 0; k < interfaces.size(); ++k) {
    interfaces[k].base = bases[k];
    if (!curved) continue;
    const int terms = static_cast<int>(uniform_int(rng, 1, 3));
    for (int m = 0; m < terms; ++m) {
      interfaces[k].amp.push_back(fam.curvature_amplitude * uniform01(rng) / terms);
      interfaces[k].freq.push_back(uniform_real(rng, 0.5, 2.5));
      interfaces[k].phase.push_back(uniform_real(rng, 0.0, 2.0 * std::numbers::pi));
    }
  }

  // Lateral trend per layer, bounded so adjacent layers never swap order.
  double min_gap = means.size() > 1 ? vmax - vmin : 0.0;
  for (std::size_t k = 0; k + 1 < means.size(); ++k) min_gap = std::min(min_gap, means[k + 1] - means[k]);
  std::vector<double> trend(means.size());
  for (auto& t : trend) t = fam.jitter_fraction * min_gap * uniform_real(rng, -1.0, 1.0);

  Field values(1, H, W);
  for (std::size_t j = 0; j < W; ++j) {
    const double x = static_cast<double>(j);
    const double lateral = W > 1 ? 2.0 * x / static_cast<double>(W - 1) - 1.0 : 0.0;
    for (std::size_t i = 0; i < H; ++i) {
      std::size_t layer = 0;
      for (const auto& itf : interfaces) {
        if (static_cast<double>(i) >= itf.depth(x, static_cast<double>(W))) ++layer;
      }
      values(0, i, j) = std::clamp(means[layer] + trend[layer] * lateral, vmin, vmax);
    }
  }
  return {VelocityField{std::move(values), dx, 0.0, 0.0}, std::move(means)};
}

/// Dip-slip offset: cells on the hanging-wall side are shifted down by `throw_cells`.
void apply_fault(Field& values, Rng& rng, std::pair<int, int> throw_range) {
  const auto H = static_cast<double>(values.height());
  const auto W = static_cast<double>(values.width());
  const double x_top = uniform_real(rng, 0.2 * W, 0.8 * W);
  const double dip = uniform_real(rng, 50.0, 80.0) * std::numbers::pi / 180.0;
  const double lean = (uniform01(rng) < 0.5 ? -1.0 : 1.0) / std::tan(dip);
  const int throw_cells = static_cast<int>(uniform_int(rng, throw_range.first, throw_range.second));
  const Field src = values;
  for (std::size_t i = 0; i < values.height(); ++i) {
    const double x_fault = x_top + lean * static_cast<double>(i);
    for (std::size_t j = 0; j < values.width(); ++j) {
      if (static_cast<double>(j) < x_fault) continue;
      const long si = std::clamp<long>(static_cast<long>(i) - throw_cells, 0, static_cast<long>(H) - 1);
      values(0, i, j) = src(0, static_cast<std::size_t>(si), j);
    }
  }
}

GeneratedModel style(const ModelFamily& fam, std::size_t H, std::size_t W, Rng& rng, double dx) {
  const auto [vmin, vmax] = fam.velocity_range;
  Field noise = normal_field(Shape{1, H, W}, rng);
  const double sigma = uniform_real(rng, 0.04, 0.12) * static_cast<double>(std::min(H, W));
  Field smooth = gaussian_blur_sigma(noise, sigma, static_cast<int>(std::ceil(3.0 * sigma)));
  // Normalize, then add a depth trend so the field resembles a compacting column.
  const double lo = smooth.min();
  const double hi = smooth.max();
  const double trend_weight = uniform_real(rng, 0.3, 0.8);
  for (std::size_t i = 0; i < H; ++i) {
    const double depth = H > 1 ? static_cast<double>(i) / static_cast<double>(H - 1) : 0.0;
    for (std::size_t j = 0; j < W; ++j) {
      const double u = hi > lo ? (smooth(0, i, j) - lo) / (hi - lo) : 0.5;
      smooth(0, i, j) = (1.0 - trend_weight) * u + trend_weight * depth;
    }
  }
  const double lo2 = smooth.min();
  const double hi2 = smooth.max();
  for (auto& v : smooth.values()) {
    const double u = hi2 > lo2 ? (v - lo2) / (hi2 - lo2) : 0.5;
    v = std::clamp(vmin + u * (vmax - vmin), vmin, vmax);
  }
  return {VelocityField{std::move(smooth), dx, 0.0, 0.0}, {}};
}

}  // namespace

GeneratedModel generate_velocity_detailed(const ModelFamily& family, std::size_t height,
                                          std::size_t width, Rng& rng, double dx) {
  validate(family);
  if (height < 16 || width < 16) throw ParameterError("generated grids must be at least 16 x 16");
  GeneratedModel out;
  switch (family.kind) {
    case FamilyKind::flat_layers:
      out = layered(family, height, width, rng, dx, false);
      break;
    case FamilyKind::curved_layers:
      out = layered(family, height, width, rng, dx, true);
      break;
    case FamilyKind::flat_fault:
    case FamilyKind::curved_fault: {
      out = layered(family, height, width, rng, dx, family.kind == FamilyKind::curved_fault);
      const int faults = static_cast<int>(uniform_int(rng, 1, 2));
      for (int f = 0; f < faults; ++f) apply_fault(out.field.values, rng, family.fault_throw_range);
      break;
    }
    case FamilyKind::style_like:
      out = style(family, height, width, rng, dx);
      break;
  }
  return out;
}

VelocityField generate_velocity(const ModelFamily& family, std::size_t height, std::size_t width,
                                Rng& rng, double dx) {
  return generate_velocity_detailed(family, height, width, rng, dx).field;
}

double blur_sigma_for_kernel(int kernel_size) {
  const int k = kernel_size % 2 == 0 ? kernel_size + 1 : kernel_size;
  return 0.3 * ((k - 1) * 0.5 - 1.0) + 0.8;
}

Field gaussian_blur_sigma(const Field& field, double sigma, int radius) {
  if (radius <= 0 || !(sigma > 0.0)) return field;
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int d = -radius; d <= radius; ++d) {
    const double w = std::exp(-0.5 * d * d / (sigma * sigma));
    kernel[static_cast<std::size_t>(d + radius)] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;

  const auto H = static_cast<long>(field.height());
  const auto W = static_cast<long>(field.width());
  Field tmp(field.shape());
  Field out(field.shape());
  for (std::size_t c = 0; c < field.channels(); ++c) {
    for (long i = 0; i < H; ++i) {
      for (long j = 0; j < W; ++j) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) {
          const long jj = std::clamp(j + d, 0L, W - 1);
          acc += kernel[static_cast<std::size_t>(d + radius)] *
                 field(c, static_cast<std::size_t>(i), static_cast<std::size_t>(jj));
        }
        tmp(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
      }
    }
    for (long i = 0; i < H; ++i) {
      for (long j = 0; j < W; ++j) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) {
          const long ii = std::clamp(i + d, 0L, H - 1);
          acc += kernel[static_cast<std::size_t>(d + radius)] *
                 tmp(c, static_cast<std::size_t>(ii), static_cast<std::size_t>(j));
        }
        out(c, static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = acc;
      }
    }
  }
  return out;
}

Field gaussian_blur(const Field& field, int kernel_size) {
  if (kernel_size <= 1) return field;
  const int k = kernel_size % 2 == 0 ? kernel_size + 1 : kernel_size;
  return gaussian_blur_sigma(field, blur_sigma_for_kernel(k), (k - 1) / 2);
}

void validate(const DistortionParams& p) {
  if (p.kernel_size_range.first < 0 || p.kernel_size_range.first > p.kernel_size_range.second) {
    throw ParameterError("invalid blur kernel size range");
  }
  const auto [g0, g1] = p.gamma_range;
  if (!(0.0 <= g0 && g0 <= g1 && g1 <= 1.0)) throw ParameterError("gamma range must satisfy 0 <= min <= max <= 1");
}

DistortionParams distortion_preset(const std::string& name) {
  if (name == "in_distribution") return DistortionParams{{8, 16}, {0.0, 0.2}};
  if (name == "ood_heavy") return DistortionParams{{16, 24}, {0.0, 0.2}};
  if (name == "ood_light") return DistortionParams{{0, 8}, {0.0, 0.2}};
  throw ParameterError("unknown distortion preset '" + name +
                       "' (expected in_distribution, ood_heavy, ood_light)");
}

Field apply_distortion(const Field& c0, int kernel_size, double gamma, const Field& noise) {
  const Field mixed = gamma == 0.0 ? c0 : lincomb(gamma, noise, 1.0 - gamma, c0);
  return gaussian_blur(mixed, std::max(kernel_size, 1));
}

Distortion distort(const Field& c0, const DistortionParams& params, Rng& rng) {
  validate(params);
  Distortion d;
  d.kernel_size = std::max(1, static_cast<int>(uniform_int(rng, params.kernel_size_range.first,
                                                           params.kernel_size_range.second)));
  d.gamma = uniform_real(rng, params.gamma_range.first, params.gamma_range.second);
  const Field z = normal_field(c0.shape(), rng);
  d.c1 = apply_distortion(c0, d.kernel_size, d.gamma, z);
  return d;
}

}  // namespace bfwi
