#include "png_panel.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

#include "bfwi/errors.hpp"

namespace bfwi::cli {

namespace {

// Viridis sampled at nine evenly spaced points.
constexpr std::array<std::array<double, 3>, 9> kViridis{{
    {0.267, 0.005, 0.329},
    {0.283, 0.141, 0.458},
    {0.254, 0.265, 0.530},
    {0.207, 0.372, 0.553},
    {0.164, 0.471, 0.558},
    {0.128, 0.567, 0.551},
    {0.135, 0.659, 0.518},
    {0.478, 0.821, 0.318},
    {0.993, 0.906, 0.144},
}};

std::array<unsigned char, 3> colormap(double u) {
  u = std::clamp(std::isfinite(u) ? u : 0.0, 0.0, 1.0) * static_cast<double>(kViridis.size() - 1);
  const auto k = std::min(static_cast<std::size_t>(u), kViridis.size() - 2);
  const double f = u - static_cast<double>(k);
  std::array<unsigned char, 3> rgb{};
  for (std::size_t c = 0; c < 3; ++c) {
    const double v = (1.0 - f) * kViridis[k][c] + f * kViridis[k + 1][c];
    rgb[c] = static_cast<unsigned char>(std::lround(255.0 * v));
  }
  return rgb;
}

}  // namespace

void write_panel_png(const std::filesystem::path& path, const std::vector<const Field*>& panels, double lo,
                     double hi, int scale) {
  if (panels.empty()) throw ParameterError("no panels to draw");
  const std::size_t h = panels.front()->height();
  const std::size_t w = panels.front()->width();
  for (const Field* p : panels) {
    if (p->height() != h || p->width() != w) throw ShapeError("panels must share a shape");
  }
  const auto s = static_cast<std::size_t>(std::max(scale, 1));
  constexpr std::size_t gap = 4;
  const std::size_t width = panels.size() * w * s + (panels.size() - 1) * gap;
  const std::size_t height = h * s;
  std::vector<unsigned char> img(width * height * 3, 255);
  for (std::size_t k = 0; k < panels.size(); ++k) {
    const std::size_t x0 = k * (w * s + gap);
    for (std::size_t i = 0; i < height; ++i) {
      for (std::size_t j = 0; j < w * s; ++j) {
        const double v = (*panels[k])(0, i / s, j / s);
        const auto rgb = colormap((v - lo) / (hi - lo));
        std::copy(rgb.begin(), rgb.end(), img.begin() + static_cast<std::ptrdiff_t>((i * width + x0 + j) * 3));
      }
    }
  }

  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t i = 0; i < height; ++i) png_write_row(png, img.data() + i * width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace bfwi::cli
