#include "bfwi/metrics.hpp"

#include <array>
#include <cmath>

#include "bfwi/errors.hpp"

namespace bfwi {

double mae(const Field& a, const Field& b) {
  require_same_shape(a, b, "mae");
  if (a.empty()) throw ShapeError("mae of empty fields");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
  return s / static_cast<double>(a.size());
}

double mse(const Field& a, const Field& b) {
  require_same_shape(a, b, "mse");
  if (a.empty()) throw ShapeError("mse of empty fields");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

namespace {

constexpr int kRadius = 5;
constexpr double kSigma = 1.5;

std::array<double, 2 * kRadius + 1> window() {
  std::array<double, 2 * kRadius + 1> w{};
  double sum = 0.0;
  for (int k = -kRadius; k <= kRadius; ++k) {
    w[static_cast<std::size_t>(k + kRadius)] = std::exp(-0.5 * k * k / (kSigma * kSigma));
    sum += w[static_cast<std::size_t>(k + kRadius)];
  }
  for (auto& v : w) v /= sum;
  return w;
}

/// Half-sample symmetric index: d c b a | a b c d | d c b a.
long reflect(long i, long n) {
  const long period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

/// Separable Gaussian filter of one H x W plane.
std::vector<double> filter(const std::vector<double>& x, std::size_t H, std::size_t W) {
  static const auto w = window();
  const auto h = static_cast<long>(H), wd = static_cast<long>(W);
  std::vector<double> tmp(H * W), out(H * W);
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < wd; ++j) {
      double s = 0.0;
      for (long k = -kRadius; k <= kRadius; ++k) {
        s += w[static_cast<std::size_t>(k + kRadius)] * x[static_cast<std::size_t>(i * wd + reflect(j + k, wd))];
      }
      tmp[static_cast<std::size_t>(i * wd + j)] = s;
    }
  }
  for (long i = 0; i < h; ++i) {
    for (long j = 0; j < wd; ++j) {
      double s = 0.0;
      for (long k = -kRadius; k <= kRadius; ++k) {
        s += w[static_cast<std::size_t>(k + kRadius)] * tmp[static_cast<std::size_t>(reflect(i + k, h) * wd + j)];
      }
      out[static_cast<std::size_t>(i * wd + j)] = s;
    }
  }
  return out;
}

}  // namespace

Field ssim_map(const Field& a, const Field& b, double data_range) {
  require_same_shape(a, b, "ssim");
  if (!(data_range > 0.0)) throw ParameterError("ssim data_range must be positive");
  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const std::size_t H = a.height(), W = a.width(), n = H * W;
  Field out(a.shape());
  for (std::size_t c = 0; c < a.channels(); ++c) {
    std::vector<double> x(a.channel(c).begin(), a.channel(c).end());
    std::vector<double> y(b.channel(c).begin(), b.channel(c).end());
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t k = 0; k < n; ++k) {
      xx[k] = x[k] * x[k];
      yy[k] = y[k] * y[k];
      xy[k] = x[k] * y[k];
    }
    const auto mx = filter(x, H, W), my = filter(y, H, W);
    const auto sxx = filter(xx, H, W), syy = filter(yy, H, W), sxy = filter(xy, H, W);
    auto dst = out.channel(c);
    for (std::size_t k = 0; k < n; ++k) {
      const double vx = sxx[k] - mx[k] * mx[k];
      const double vy = syy[k] - my[k] * my[k];
      const double cov = sxy[k] - mx[k] * my[k];
      dst[k] = ((2.0 * mx[k] * my[k] + c1) * (2.0 * cov + c2)) /
               ((mx[k] * mx[k] + my[k] * my[k] + c1) * (vx + vy + c2));
    }
  }
  return out;
}

double ssim(const Field& a, const Field& b, double data_range) {
  if (a.empty()) throw ShapeError("ssim of empty fields");
  const Field m = ssim_map(a, b, data_range);
  return m.sum() / static_cast<double>(m.size());
}

}  // namespace bfwi
