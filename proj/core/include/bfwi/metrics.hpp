#pragma once

#include "bfwi/tensor.hpp"

namespace bfwi {

double mae(const Field& a, const Field& b);
double mse(const Field& a, const Field& b);

/// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, half-sample symmetric boundary, averaged over every pixel of
/// every channel.
double ssim(const Field& a, const Field& b, double data_range = 2.0);

/// Per-pixel SSIM map of a single channel.
Field ssim_map(const Field& a, const Field& b, double data_range = 2.0);

}  // namespace bfwi
