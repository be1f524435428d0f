#include "doctest.h"

#include <cmath>

#include "bfwi/errors.hpp"
#include "bfwi/metrics.hpp"
#include "test_util.hpp"

using namespace bfwi;

namespace {

/// Direct 2D windowed SSIM with explicit mirrored indexing.
double reference_ssim(const Field& a, const Field& b, double range) {
  const long H = static_cast<long>(a.height()), W = static_cast<long>(a.width());
  auto mirror = [](long i, long n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return i;
  };
  double g[11][11], gs = 0.0;
  for (int u = 0; u < 11; ++u)
    for (int v = 0; v < 11; ++v) gs += g[u][v] = std::exp(-((u - 5) * (u - 5) + (v - 5) * (v - 5)) / 4.5);
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  double total = 0.0;
  for (std::size_t c = 0; c < a.channels(); ++c) {
    for (long i = 0; i < H; ++i) {
      for (long j = 0; j < W; ++j) {
        double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
        for (int u = 0; u < 11; ++u) {
          for (int v = 0; v < 11; ++v) {
            const double w = g[u][v] / gs;
            const double x = a(c, static_cast<std::size_t>(mirror(i + u - 5, H)), static_cast<std::size_t>(mirror(j + v - 5, W)));
            const double y = b(c, static_cast<std::size_t>(mirror(i + u - 5, H)), static_cast<std::size_t>(mirror(j + v - 5, W)));
            mx += w * x;
            my += w * y;
            sxx += w * x * x;
            syy += w * y * y;
            sxy += w * x * y;
          }
        }
        const double vx = sxx - mx * mx, vy = syy - my * my, cv = sxy - mx * my;
        total += (2 * mx * my + c1) * (2 * cv + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    }
  }
  return total / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("mae and mse") {
  Field a(1, 2, 2, 0.0), b(1, 2, 2, 0.0);
  b[0] = 1.0;
  b[3] = -3.0;
  CHECK(mae(a, b) == 1.0);
  CHECK(mse(a, b) == 2.5);
  CHECK_THROWS_AS(mae(a, Field(1, 2, 3)), ShapeError);
  CHECK_THROWS_AS(mse(Field{}, Field{}), ShapeError);
}

TEST_CASE("ssim matches a direct windowed computation") {
  const Field a = testing::random_field({2, 13, 9}, 1);
  Field b = testing::random_field({2, 13, 9}, 2);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = 0.7 * a[k] + 0.3 * b[k];
  CHECK(ssim(a, b) == doctest::Approx(reference_ssim(a, b, 2.0)).epsilon(1e-12));
  CHECK(ssim(a, b, 5.0) == doctest::Approx(reference_ssim(a, b, 5.0)).epsilon(1e-12));
  // Fields narrower than the window wrap the mirror more than once.
  const Field s = testing::random_field({1, 3, 4}, 3), t = testing::random_field({1, 3, 4}, 4);
  CHECK(ssim(s, t) == doctest::Approx(reference_ssim(s, t, 2.0)).epsilon(1e-12));
}

TEST_CASE("ssim identities") {
  const Field a = testing::random_field({1, 20, 20}, 5);
  const Field b = testing::random_field({1, 20, 20}, 6);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-14));
  CHECK(ssim(a, b) < 1.0);
  // Negated structure around a common positive mean.
  Field up = a, down = -1.0 * a;
  for (auto& v : up.values()) v += 1.0;
  for (auto& v : down.values()) v += 1.0;
  CHECK(ssim(up, down) < 0.0);
  const Field flat(1, 16, 16, 0.3);
  CHECK(ssim(flat, flat) == doctest::Approx(1.0));
}

TEST_CASE("constant offset only changes luminance") {
  const double c = 0.4, d = 0.1;
  const Field x(1, 16, 16, c), y(1, 16, 16, c + d);
  const double c1 = 0.02 * 0.02;
  CHECK(ssim(x, y) == doctest::Approx((2 * c * (c + d) + c1) / (c * c + (c + d) * (c + d) + c1)).epsilon(1e-12));
}

TEST_CASE("ssim decreases as noise grows") {
  const Field a = testing::random_field({1, 24, 24}, 7);
  const Field z = testing::random_field({1, 24, 24}, 8);
  double prev = 1.0;
  for (double s : {0.05, 0.1, 0.3, 1.0}) {
    const double v = ssim(a, lincomb(1.0, a, s, z));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("ssim map shape and range checks") {
  const Field a = testing::random_field({1, 8, 8}, 1);
  const Field m = ssim_map(a, a);
  CHECK(m.shape() == a.shape());
  for (double v : m.values()) CHECK(v == doctest::Approx(1.0));
  CHECK_THROWS_AS(ssim(a, a, 0.0), ParameterError);
  CHECK_THROWS_AS(ssim(a, Field(1, 8, 7)), ShapeError);
}
