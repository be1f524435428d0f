#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "bfwi/acoustics.hpp"
#include "bfwi/random.hpp"
#include "bfwi/tensor.hpp"

namespace bfwi {

enum class FamilyKind { flat_layers, curved_layers, flat_fault, curved_fault, style_like };

struct ModelFamily {
  FamilyKind kind = FamilyKind::flat_layers;
  std::pair<int, int> layer_count_range{2, 8};
  std::pair<double, double> velocity_range{1500.0, 4500.0};
  double curvature_amplitude = 6.0;        ///< grid cells
  std::pair<int, int> fault_throw_range{3, 12};  ///< grid cells
  double jitter_fraction = 0.2;  ///< lateral trend amplitude as a fraction of the smallest layer gap
};

/// Named presets: flatvel, curvevel, flatfault, curvefault, stylelike.
ModelFamily family_preset(const std::string& name);
std::string family_name(FamilyKind kind);
FamilyKind family_kind_from_string(const std::string& name);

void validate(const ModelFamily& family);

struct GeneratedModel {
  VelocityField field;
  /// Layer velocities before lateral jitter, top to bottom (empty for style_like).
  std::vector<double> layer_means;
};

GeneratedModel generate_velocity_detailed(const ModelFamily& family, std::size_t height,
                                          std::size_t width, Rng& rng, double dx = 10.0);

VelocityField generate_velocity(const ModelFamily& family, std::size_t height, std::size_t width,
                                Rng& rng, double dx = 10.0);

/// Blur sigma for an odd kernel size k: 0.3 ((k - 1) / 2 - 1) + 0.8.
double blur_sigma_for_kernel(int kernel_size);

/// Separable normalized Gaussian blur of every channel with replicate padding.
/// Even kernel sizes are bumped to the next odd size; k <= 1 is the identity.
Field gaussian_blur(const Field& field, int kernel_size);

/// Same, with an explicit sigma and radius.
Field gaussian_blur_sigma(const Field& field, double sigma, int radius);

struct DistortionParams {
  std::pair<int, int> kernel_size_range{8, 16};
  std::pair<double, double> gamma_range{0.0, 0.2};
};

void validate(const DistortionParams& params);

/// Presets: "in_distribution" (k in [8, 16]), "ood_heavy" (k in [16, 24]),
/// "ood_light" (k in [0, 8]); gamma in [0, 0.2] for all three.
DistortionParams distortion_preset(const std::string& name);

struct Distortion {
  Field c1;
  int kernel_size = 1;
  double gamma = 0.0;
};

/// c1 = S_k(gamma * z + (1 - gamma) * c0) with k and gamma drawn uniformly.
Distortion distort(const Field& c0, const DistortionParams& params, Rng& rng);

/// Deterministic core of distort for fixed (k, gamma, z).
Field apply_distortion(const Field& c0, int kernel_size, double gamma, const Field& noise);

}  // namespace bfwi
