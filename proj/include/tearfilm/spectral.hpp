#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <stdexcept>

#include <Eigen/Core>

#include "tearfilm/errors.hpp"

namespace tearfilm {

/// Real grid values, stored row-major with x fastest: index = j * nx + i.
using Field = Eigen::ArrayXd;

namespace spectral {

/// Uniform periodic grid on (-pi, pi] per axis. Node i sits at
/// x_i = -pi + (i + 1) * 2pi / nx, so the last node is x = pi and the
/// origin is node nx/2 - 1.
///
/// A line grid (ny == 1) is the one-dimensional restriction used by the
/// streak model; y-derivatives on it vanish identically.
class PeriodicGrid {
 public:
  PeriodicGrid(int nx, int ny);
  static PeriodicGrid line(int nx);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  bool is_line() const { return ny_ == 1; }

  double dx() const;
  double dy() const;
  double x(int i) const;
  double y(int j) const;
  /// (2 pi)^d, the area (or length) of the periodic cell.
  double measure() const;
  /// Index of the node at the origin along each axis.
  int origin_i() const { return nx_ / 2 - 1; }
  int origin_j() const { return is_line() ? 0 : ny_ / 2 - 1; }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

  Field x_coords() const;
  Field y_coords() const;

  bool operator==(const PeriodicGrid& other) const { return nx_ == other.nx_ && ny_ == other.ny_; }

 private:
  struct LineTag {};
  PeriodicGrid(int nx, LineTag);
  int nx_;
  int ny_;
};

/// Half-complex spectrum of a real field (ny rows by nx/2 + 1 columns).
using Spectrum = Eigen::ArrayXcd;

/// Transform-based differentiation on a PeriodicGrid.
///
/// Plans are created once with FFTW_ESTIMATE, so results are bitwise
/// reproducible for a given grid. Every call allocates its own work arrays;
/// a single instance can be shared between threads.
class SpectralOps {
 public:
  explicit SpectralOps(const PeriodicGrid& grid);
  ~SpectralOps();
  SpectralOps(const SpectralOps&) = delete;
  SpectralOps& operator=(const SpectralOps&) = delete;

  const PeriodicGrid& grid() const { return grid_; }
  std::size_t spectrum_size() const;

  Spectrum forward(const Field& u) const;
  Field inverse(const Spectrum& s) const;

  Field deriv_x(const Field& u, int order) const;
  Field deriv_y(const Field& u, int order) const;
  Field laplacian(const Field& u) const;
  /// Both first derivatives from one forward transform.
  void gradient(const Field& u, Field& ux, Field& uy) const;
  /// d(qx)/dx + d(qy)/dy.
  Field divergence(const Field& qx, const Field& qy) const;
  double integrate(const Field& u) const;
  double mean(const Field& u) const;

  /// Value of the trigonometric interpolant of u at an arbitrary point.
  double evaluate_at(const Spectrum& s, double x, double y) const;

  // Wavenumber helpers used by spectral-space preconditioners.
  const Eigen::ArrayXd& kx() const { return kx_; }
  const Eigen::ArrayXd& ky() const { return ky_; }
  /// |k|^2 for each spectrum entry.
  const Eigen::ArrayXd& k_squared() const { return ksq_; }

 private:
  void check(const Field& u) const;
  Field apply_multiplier(const Field& u, int order_x, int order_y) const;

  PeriodicGrid grid_;
  int ncx_;
  Eigen::ArrayXd kx_;
  Eigen::ArrayXd ky_;
  Eigen::ArrayXd ksq_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

Field deriv_x(const Field& u, const PeriodicGrid& grid, int order);
Field deriv_y(const Field& u, const PeriodicGrid& grid, int order);
Field laplacian(const Field& u, const PeriodicGrid& grid);
double integrate_domain(const Field& u, const PeriodicGrid& grid);

/// Resample the trigonometric interpolant of u from grid_in onto grid_out,
/// zero-padding or truncating the spectrum. Nyquist modes are split
/// symmetrically when padding and folded when truncating.
Field fourier_interpolate(const Field& u, const PeriodicGrid& grid_in, const PeriodicGrid& grid_out);

/// Shared SpectralOps instance per grid size (plans are costly to rebuild).
const SpectralOps& ops_for(const PeriodicGrid& grid);

}  // namespace spectral
}  // namespace tearfilm
