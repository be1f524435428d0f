#pragma once

#include <cstddef>
#include <vector>

#include "bfwi/tensor.hpp"

namespace bfwi {

/// Acoustic velocity model in m/s on a square grid of spacing dx.
struct VelocityField {
  Field values;  ///< 1 x H x W
  double dx = 10.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  std::size_t height() const noexcept { return values.height(); }
  std::size_t width() const noexcept { return values.width(); }
};

/// Throws ParameterError unless every value is finite and positive and the grid
/// is at least 8 x 8.
void validate(const VelocityField& field);

VelocityField make_velocity_field(Field values, double dx = 10.0);

struct PointSource {
  std::size_t x = 0;      ///< column index
  std::size_t depth = 1;  ///< row index; row 0 is the free surface
  double peak_frequency = 15.0;
  double amplitude = 1.0;
  double delay = -1.0;  ///< wavelet delay in s; negative means 1.5 / f
  double effective_delay() const noexcept {
    return delay >= 0.0 ? delay : 1.5 / peak_frequency;
  }
};

struct AcquisitionGeometry {
  std::vector<PointSource> sources;
  std::vector<std::size_t> receivers;  ///< column indices
  std::size_t receiver_depth = 1;      ///< row index of the receiver line
  double dt = 1e-3;
  std::size_t n_t = 1000;  ///< simulation time steps
  std::size_t record_every = 1;
  std::size_t sponge_cells = 20;

  std::size_t samples() const noexcept { return (n_t + record_every - 1) / record_every; }
};

/// Equispaced sources one node below the free surface and one receiver per
/// column.
AcquisitionGeometry make_surface_geometry(std::size_t width, std::size_t n_sources,
                                          double peak_frequency = 15.0, double dt = 1e-3,
                                          std::size_t n_t = 1000, std::size_t record_every = 1);

void validate(const AcquisitionGeometry& geometry, const VelocityField& field);

/// Shot gathers, S x T x R.
struct Seismogram {
  Field data;
  double dt_effective = 1e-3;
  AcquisitionGeometry geometry;
};

/// Ricker wavelet (1 - 2 pi^2 f^2 tau^2) exp(-pi^2 f^2 tau^2) with tau = t - delay.
double ricker(double peak_frequency, double t, double delay);

/// Stability constant of the O(2,4) staggered scheme in 2D:
/// 1 / (sqrt(2) * (9/8 + 1/24)).
inline constexpr double kCflConstant = 0.606;

struct CflCheck {
  bool stable;
  double limit_dt;
};

CflCheck check_cfl(const VelocityField& field, double dt);

/// One shot: leapfrog O(2,4) staggered-grid pressure-velocity scheme, free
/// surface on top, quadratic exponential sponge on the other three edges.
/// Returns a 1 x T x R record. Throws CflError if dt is unstable and
/// NumericalError if the wavefield becomes non-finite.
Field simulate_shot(const VelocityField& field, std::size_t source_index,
                    const AcquisitionGeometry& geometry);

/// All shots in geometry order.
Seismogram simulate_survey(const VelocityField& field, const AcquisitionGeometry& geometry,
                           std::size_t threads = 1);

}  // namespace bfwi
