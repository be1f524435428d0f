#include "bfwi/acoustics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bfwi/errors.hpp"
#include "bfwi/parallel.hpp"

namespace bfwi {

void validate(const VelocityField& field) {
  if (field.values.channels() != 1) throw ShapeError("velocity field must have one channel");
  if (field.height() < 8 || field.width() < 8) {
    throw ParameterError("velocity field must be at least 8 x 8, got " +
                         field.values.shape().str());
  }
  if (!(field.dx > 0.0)) throw ParameterError("grid spacing must be positive");
  for (double v : field.values.values()) {
    if (!std::isfinite(v) || !(v > 0.0)) throw ParameterError("velocities must be finite and > 0");
  }
}

VelocityField make_velocity_field(Field values, double dx) {
  VelocityField f{std::move(values), dx, 0.0, 0.0};
  validate(f);
  return f;
}

AcquisitionGeometry make_surface_geometry(std::size_t width, std::size_t n_sources,
                                          double peak_frequency, double dt, std::size_t n_t,
                                          std::size_t record_every) {
  if (n_sources == 0) throw ParameterError("need at least one source");
  AcquisitionGeometry g;
  g.dt = dt;
  g.n_t = n_t;
  g.record_every = record_every;
  for (std::size_t s = 0; s < n_sources; ++s) {
    PointSource src;
    src.x = n_sources == 1 ? width / 2
                           : static_cast<std::size_t>(std::llround(
                                 static_cast<double>(s) * static_cast<double>(width - 1) /
                                 static_cast<double>(n_sources - 1)));
    src.depth = 1;
    src.peak_frequency = peak_frequency;
    g.sources.push_back(src);
  }
  for (std::size_t r = 0; r < width; ++r) g.receivers.push_back(r);
  return g;
}

void validate(const AcquisitionGeometry& g, const VelocityField& field) {
  if (!(g.dt > 0.0)) throw ParameterError("dt must be positive");
  if (g.n_t < 1) throw ParameterError("n_t must be >= 1");
  if (g.record_every < 1) throw ParameterError("record_every must be >= 1");
  if (g.sources.empty()) throw ParameterError("geometry has no sources");
  if (g.receivers.empty()) throw ParameterError("geometry has no receivers");
  for (const auto& s : g.sources) {
    if (s.x >= field.width() || s.depth >= field.height()) {
      throw ParameterError("source position outside the grid");
    }
    if (s.depth == 0) throw ParameterError("source on the free surface (row 0) radiates nothing");
    if (!(s.peak_frequency > 0.0)) throw ParameterError("source peak frequency must be positive");
  }
  for (auto r : g.receivers) {
    if (r >= field.width()) throw ParameterError("receiver position outside the grid");
  }
  if (g.receiver_depth >= field.height()) throw ParameterError("receiver depth outside the grid");
}

double ricker(double peak_frequency, double t, double delay) {
  const double tau = t - delay;
  const double a = std::numbers::pi * std::numbers::pi * peak_frequency * peak_frequency * tau * tau;
  return (1.0 - 2.0 * a) * std::exp(-a);
}

CflCheck check_cfl(const VelocityField& field, double dt) {
  const double vmax = field.values.max();
  const double limit = kCflConstant * field.dx / vmax;
  return {dt <= limit, limit};
}

namespace {

constexpr double kC1 = 9.0 / 8.0;
constexpr double kC2 = -1.0 / 24.0;
constexpr std::size_t kMargin = 2;

/// Padded computational grid with a 2-cell ghost margin around it.
class Grid {
 public:
  Grid(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), stride_(cols + 2 * kMargin),
        data_((rows + 2 * kMargin) * stride_, 0.0) {}

  std::size_t index(std::ptrdiff_t r, std::ptrdiff_t c) const {
    return static_cast<std::size_t>(r + static_cast<std::ptrdiff_t>(kMargin)) * stride_ +
           static_cast<std::size_t>(c + static_cast<std::ptrdiff_t>(kMargin));
  }
  double& at(std::ptrdiff_t r, std::ptrdiff_t c) { return data_[index(r, c)]; }
  double at(std::ptrdiff_t r, std::ptrdiff_t c) const { return data_[index(r, c)]; }
  double* raw() { return data_.data(); }
  std::ptrdiff_t stride() const { return static_cast<std::ptrdiff_t>(stride_); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> all() const { return data_; }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::size_t stride_;
  std::vector<double> data_;
};

}  // namespace

Field simulate_shot(const VelocityField& field, std::size_t source_index,
                    const AcquisitionGeometry& geometry) {
  validate(field);
  validate(geometry, field);
  if (source_index >= geometry.sources.size()) throw IndexError("source index out of range");
  const auto cfl = check_cfl(field, geometry.dt);
  if (!cfl.stable) {
    throw CflError("time step " + std::to_string(geometry.dt) + " s exceeds CFL limit " +
                       std::to_string(cfl.limit_dt) + " s",
                   cfl.limit_dt);
  }

  const std::size_t H = field.height();
  const std::size_t W = field.width();
  const std::size_t pad = geometry.sponge_cells;
  const std::size_t NZ = H + pad;
  const std::size_t NX = W + 2 * pad;
  const double dt = geometry.dt;
  const double dx = field.dx;
  const double vmax = field.values.max();

  Grid p(NZ, NX), vx(NZ, NX), vz(NZ, NX), stiff(NZ, NX), damp(NZ, NX);

  // Damping d(i) = d0 (i / L)^2 with i the depth into the sponge.
  const double sponge_len = static_cast<double>(pad) * dx;
  const double d0 = pad > 0 ? 3.0 * vmax * std::log(1.0e3) / (2.0 * sponge_len) : 0.0;
  for (std::size_t r = 0; r < NZ; ++r) {
    for (std::size_t c = 0; c < NX; ++c) {
      const std::size_t i = std::min(r, H - 1);
      const std::size_t j = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(c) -
                                                           static_cast<std::ptrdiff_t>(pad),
                                                       0, static_cast<std::ptrdiff_t>(W) - 1);
      const double v = field.values(0, i, j);
      const auto rr = static_cast<std::ptrdiff_t>(r);
      const auto cc = static_cast<std::ptrdiff_t>(c);
      stiff.at(rr, cc) = v * v * dt / dx;
      std::size_t depth_into = 0;
      if (c < pad) depth_into = std::max(depth_into, pad - c);
      if (c >= pad + W) depth_into = std::max(depth_into, c - (pad + W - 1));
      if (r >= H) depth_into = std::max(depth_into, r - (H - 1));
      const double frac = pad > 0 ? static_cast<double>(depth_into) / static_cast<double>(pad) : 0.0;
      damp.at(rr, cc) = std::exp(-d0 * frac * frac * dt);
    }
  }

  const auto& src = geometry.sources[source_index];
  const auto src_r = static_cast<std::ptrdiff_t>(src.depth);
  const auto src_c = static_cast<std::ptrdiff_t>(src.x + pad);
  const double src_delay = src.effective_delay();
  const auto rec_r = static_cast<std::ptrdiff_t>(geometry.receiver_depth);

  const std::size_t T = geometry.samples();
  const std::size_t R = geometry.receivers.size();
  Field record(1, T, R, 0.0);
  const double k_v = dt / dx;
  const std::ptrdiff_t S = p.stride();
  const auto nz = static_cast<std::ptrdiff_t>(NZ);
  const auto nx = static_cast<std::ptrdiff_t>(NX);

  for (std::size_t n = 0; n < geometry.n_t; ++n) {
    if (n % geometry.record_every == 0) {
      const std::size_t k = n / geometry.record_every;
      for (std::size_t q = 0; q < R; ++q) {
        record(0, k, q) =
            p.at(rec_r, static_cast<std::ptrdiff_t>(geometry.receivers[q] + pad));
      }
    }

    // Free surface: pressure is odd about row 0.
    for (std::ptrdiff_t c = 0; c < nx; ++c) {
      p.at(-1, c) = -p.at(1, c);
      p.at(-2, c) = -p.at(2, c);
    }

    {
      double* P = p.raw();
      double* VX = vx.raw();
      double* VZ = vz.raw();
      const double* D = damp.raw();
      for (std::ptrdiff_t r = 0; r < nz; ++r) {
        const std::size_t base = p.index(r, 0);
        for (std::ptrdiff_t c = 0; c < nx; ++c) {
          const std::size_t k = base + static_cast<std::size_t>(c);
          const double dpx = kC1 * (P[k + 1] - P[k]) + kC2 * (P[k + 2] - P[k - 1]);
          const double dpz = kC1 * (P[k + S] - P[k]) + kC2 * (P[k + 2 * S] - P[k - S]);
          VX[k] = (VX[k] - k_v * dpx) * D[k];
          VZ[k] = (VZ[k] - k_v * dpz) * D[k];
        }
      }
    }

    // Vertical velocity is even about the free surface.
    for (std::ptrdiff_t c = 0; c < nx; ++c) {
      vz.at(-1, c) = vz.at(0, c);
      vz.at(-2, c) = vz.at(1, c);
    }

    {
      double* P = p.raw();
      const double* VX = vx.raw();
      const double* VZ = vz.raw();
      const double* K = stiff.raw();
      const double* D = damp.raw();
      for (std::ptrdiff_t r = 1; r < nz; ++r) {
        const std::size_t base = p.index(r, 0);
        for (std::ptrdiff_t c = 0; c < nx; ++c) {
          const std::size_t k = base + static_cast<std::size_t>(c);
          const double div = kC1 * (VX[k] - VX[k - 1]) + kC2 * (VX[k + 1] - VX[k - 2]) +
                             kC1 * (VZ[k] - VZ[k - S]) + kC2 * (VZ[k + S] - VZ[k - 2 * S]);
          P[k] = (P[k] - K[k] * div) * D[k];
        }
      }
    }

    const double t_mid = (static_cast<double>(n) + 0.5) * dt;
    p.at(src_r, src_c) += dt * src.amplitude * ricker(src.peak_frequency, t_mid, src_delay);

    if (n % 64 == 63) {
      double acc = 0.0;
      for (double v : p.all()) acc += v * v;
      if (!std::isfinite(acc)) throw NumericalError("wavefield became non-finite", static_cast<long long>(n));
    }
  }
  return record;
}

Seismogram simulate_survey(const VelocityField& field, const AcquisitionGeometry& geometry,
                           std::size_t threads) {
  validate(field);
  validate(geometry, field);
  const std::size_t S = geometry.sources.size();
  const std::size_t T = geometry.samples();
  const std::size_t R = geometry.receivers.size();
  Seismogram out;
  out.data = Field(S, T, R, 0.0);
  out.dt_effective = geometry.dt * static_cast<double>(geometry.record_every);
  out.geometry = geometry;
  parallel_for(S, threads, [&](std::size_t s) {
    const Field shot = simulate_shot(field, s, geometry);
    std::copy(shot.values().begin(), shot.values().end(), out.data.channel(s).begin());
  });
  return out;
}

}  // namespace bfwi
