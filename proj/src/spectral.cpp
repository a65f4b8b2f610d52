#include "tearfilm/spectral.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <fftw3.h>

namespace tearfilm::spectral {

namespace {

constexpr double kPi = std::numbers::pi;

// FFTW's planner is not reentrant; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

using cd = std::complex<double>;

}  // namespace

// ---------------------------------------------------------------------------
// PeriodicGrid

PeriodicGrid::PeriodicGrid(int nx, int ny) : nx_(nx), ny_(ny) {
  if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0) {
    throw std::invalid_argument("PeriodicGrid: nx and ny must be even and >= 8 (got " +
                                std::to_string(nx) + "x" + std::to_string(ny) + ")");
  }
}

PeriodicGrid::PeriodicGrid(int nx, LineTag) : nx_(nx), ny_(1) {
  if (nx < 8 || nx % 2 != 0) {
    throw std::invalid_argument("PeriodicGrid::line: nx must be even and >= 8");
  }
}

PeriodicGrid PeriodicGrid::line(int nx) { return PeriodicGrid(nx, LineTag{}); }

double PeriodicGrid::dx() const { return 2.0 * kPi / nx_; }
double PeriodicGrid::dy() const { return is_line() ? 0.0 : 2.0 * kPi / ny_; }
double PeriodicGrid::x(int i) const { return -kPi + (i + 1) * dx(); }
double PeriodicGrid::y(int j) const { return is_line() ? 0.0 : -kPi + (j + 1) * dy(); }
double PeriodicGrid::measure() const { return is_line() ? 2.0 * kPi : 4.0 * kPi * kPi; }

Field PeriodicGrid::x_coords() const {
  Field out(size());
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i) out[index(i, j)] = x(i);
  return out;
}

Field PeriodicGrid::y_coords() const {
  Field out(size());
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i) out[index(i, j)] = y(j);
  return out;
}

// ---------------------------------------------------------------------------
// SpectralOps

struct SpectralOps::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
  }
};

SpectralOps::SpectralOps(const PeriodicGrid& grid)
    : grid_(grid), ncx_(grid.nx() / 2 + 1), plans_(std::make_unique<Plans>()) {
  const int nx = grid_.nx();
  const int ny = grid_.ny();
  kx_.resize(ncx_);
  for (int m = 0; m < ncx_; ++m) kx_[m] = m;
  ky_.resize(ny);
  for (int j = 0; j < ny; ++j) ky_[j] = (j < ny / 2 || ny == 1) ? j : j - ny;
  if (ny == 1) ky_[0] = 0.0;
  ksq_.resize(static_cast<Eigen::Index>(ny) * ncx_);
  for (int j = 0; j < ny; ++j)
    for (int m = 0; m < ncx_; ++m) ksq_[j * ncx_ + m] = kx_[m] * kx_[m] + ky_[j] * ky_[j];

  std::vector<double> rbuf(grid_.size());
  std::vector<fftw_complex> cbuf(spectrum_size());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (grid_.is_line()) {
    plans_->r2c = fftw_plan_dft_r2c_1d(nx, rbuf.data(), cbuf.data(), flags);
    plans_->c2r = fftw_plan_dft_c2r_1d(nx, cbuf.data(), rbuf.data(), flags);
  } else {
    plans_->r2c = fftw_plan_dft_r2c_2d(ny, nx, rbuf.data(), cbuf.data(), flags);
    plans_->c2r = fftw_plan_dft_c2r_2d(ny, nx, cbuf.data(), rbuf.data(), flags);
  }
  if (!plans_->r2c || !plans_->c2r) throw std::runtime_error("SpectralOps: FFTW planning failed");
}

SpectralOps::~SpectralOps() = default;

std::size_t SpectralOps::spectrum_size() const {
  return static_cast<std::size_t>(grid_.ny()) * ncx_;
}

void SpectralOps::check(const Field& u) const {
  if (static_cast<std::size_t>(u.size()) != grid_.size()) {
    throw DimensionError("field has " + std::to_string(u.size()) + " values, grid has " +
                         std::to_string(grid_.size()));
  }
}

Spectrum SpectralOps::forward(const Field& u) const {
  check(u);
  Spectrum s(static_cast<Eigen::Index>(spectrum_size()));
  // r2c plans preserve their input.
  fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(u.data()),
                       reinterpret_cast<fftw_complex*>(s.data()));
  return s;
}

Field SpectralOps::inverse(const Spectrum& s) const {
  Spectrum work = s;  // c2r destroys its input
  Field u(static_cast<Eigen::Index>(grid_.size()));
  fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(work.data()), u.data());
  u /= static_cast<double>(grid_.size());
  return u;
}

Field SpectralOps::apply_multiplier(const Field& u, int order_x, int order_y) const {
  Spectrum s = forward(u);
  const int ny = grid_.ny();
  const int nyq_x = grid_.nx() / 2;
  const int nyq_y = grid_.is_line() ? -1 : ny / 2;
  auto factor = [](double k, int order) -> cd {
    cd f(1.0, 0.0);
    for (int o = 0; o < order; ++o) f *= cd(0.0, k);
    return f;
  };
  for (int j = 0; j < ny; ++j) {
    const bool zero_y = (order_y % 2 == 1) && j == nyq_y;
    const cd fy = factor(ky_[j], order_y);
    for (int m = 0; m < ncx_; ++m) {
      const bool zero_x = (order_x % 2 == 1) && m == nyq_x;
      auto& v = s[j * ncx_ + m];
      if (zero_x || zero_y) {
        v = 0.0;
      } else {
        v *= fy * factor(kx_[m], order_x);
      }
    }
  }
  return inverse(s);
}

Field SpectralOps::deriv_x(const Field& u, int order) const {
  if (order != 1 && order != 2) throw std::invalid_argument("deriv_x: order must be 1 or 2");
  return apply_multiplier(u, order, 0);
}

Field SpectralOps::deriv_y(const Field& u, int order) const {
  if (order != 1 && order != 2) throw std::invalid_argument("deriv_y: order must be 1 or 2");
  return apply_multiplier(u, 0, order);
}

Field SpectralOps::laplacian(const Field& u) const {
  Spectrum s = forward(u);
  s *= -ksq_;
  return inverse(s);
}

void SpectralOps::gradient(const Field& u, Field& ux, Field& uy) const {
  const Spectrum s = forward(u);
  const int ny = grid_.ny();
  const int nyq_x = grid_.nx() / 2;
  const int nyq_y = grid_.is_line() ? -1 : ny / 2;
  Spectrum sx(s.size()), sy(s.size());
  for (int j = 0; j < ny; ++j) {
    for (int m = 0; m < ncx_; ++m) {
      const auto idx = j * ncx_ + m;
      sx[idx] = (m == nyq_x) ? cd(0.0) : cd(0.0, kx_[m]) * s[idx];
      sy[idx] = (j == nyq_y) ? cd(0.0) : cd(0.0, ky_[j]) * s[idx];
    }
  }
  ux = inverse(sx);
  if (grid_.is_line()) {
    uy = Field::Zero(u.size());
  } else {
    uy = inverse(sy);
  }
}

Field SpectralOps::divergence(const Field& qx, const Field& qy) const {
  const Spectrum sx = forward(qx);
  Spectrum out(sx.size());
  const int ny = grid_.ny();
  const int nyq_x = grid_.nx() / 2;
  const int nyq_y = grid_.is_line() ? -1 : ny / 2;
  if (grid_.is_line()) {
    for (int m = 0; m < ncx_; ++m) out[m] = (m == nyq_x) ? cd(0.0) : cd(0.0, kx_[m]) * sx[m];
    return inverse(out);
  }
  const Spectrum sy = forward(qy);
  for (int j = 0; j < ny; ++j) {
    for (int m = 0; m < ncx_; ++m) {
      const auto idx = j * ncx_ + m;
      const cd a = (m == nyq_x) ? cd(0.0) : cd(0.0, kx_[m]) * sx[idx];
      const cd b = (j == nyq_y) ? cd(0.0) : cd(0.0, ky_[j]) * sy[idx];
      out[idx] = a + b;
    }
  }
  return inverse(out);
}

double SpectralOps::mean(const Field& u) const {
  check(u);
  return u.mean();
}

double SpectralOps::integrate(const Field& u) const { return mean(u) * grid_.measure(); }

double SpectralOps::evaluate_at(const Spectrum& s, double x, double y) const {
  const int nx = grid_.nx();
  const int ny = grid_.ny();
  const double x0 = grid_.x(0);
  const double y0 = grid_.y(0);
  // Column factors along x.
  std::vector<cd> ex(ncx_);
  for (int m = 0; m < ncx_; ++m) {
    if (m == 0) {
      ex[m] = 1.0;
    } else if (m == nx / 2) {
      ex[m] = std::cos(m * (x - x0));
    } else {
      ex[m] = 2.0 * std::exp(cd(0.0, m * (x - x0)));
    }
  }
  cd total = 0.0;
  for (int j = 0; j < ny; ++j) {
    cd ey;
    if (grid_.is_line()) {
      ey = 1.0;
    } else if (j == ny / 2) {
      ey = std::cos(ky_[j] * (y - y0));
    } else {
      ey = std::exp(cd(0.0, ky_[j] * (y - y0)));
    }
    cd row = 0.0;
    for (int m = 0; m < ncx_; ++m) row += s[j * ncx_ + m] * ex[m];
    total += row * ey;
  }
  return total.real() / static_cast<double>(grid_.size());
}

// ---------------------------------------------------------------------------
// Free functions

const SpectralOps& ops_for(const PeriodicGrid& grid) {
  static std::mutex cache_mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<SpectralOps>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto& slot = cache[{grid.nx(), grid.ny()}];
  if (!slot) slot = std::make_unique<SpectralOps>(grid);
  return *slot;
}

Field deriv_x(const Field& u, const PeriodicGrid& grid, int order) {
  return ops_for(grid).deriv_x(u, order);
}
Field deriv_y(const Field& u, const PeriodicGrid& grid, int order) {
  return ops_for(grid).deriv_y(u, order);
}
Field laplacian(const Field& u, const PeriodicGrid& grid) { return ops_for(grid).laplacian(u); }
double integrate_domain(const Field& u, const PeriodicGrid& grid) {
  return ops_for(grid).integrate(u);
}

namespace {

// Trigonometric resampling of one periodic line of n_in samples (first node
// at -pi + 2pi/n_in) onto n_out samples.
std::vector<cd> resample_line(const std::vector<cd>& in, int n_out) {
  const int n_in = static_cast<int>(in.size());
  std::vector<cd> spec(n_in), gspec(n_out, cd(0.0));
  {
    std::vector<cd> work = in;
    fftw_plan plan;
    {
      std::lock_guard<std::mutex> lock(planner_mutex());
      plan = fftw_plan_dft_1d(n_in, reinterpret_cast<fftw_complex*>(work.data()),
                              reinterpret_cast<fftw_complex*>(spec.data()), FFTW_FORWARD,
                              FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  const double shift = 2.0 * kPi / n_out - 2.0 * kPi / n_in;
  const double scale = static_cast<double>(n_out) / n_in;
  auto deposit = [&](int k, cd value) {
    if (2 * std::abs(k) > n_out) return;
    const int slot = ((k % n_out) + n_out) % n_out;
    gspec[slot] += value * std::exp(cd(0.0, k * shift)) * scale;
  };
  for (int q = 0; q < n_in; ++q) {
    if (2 * q == n_in) {
      deposit(n_in / 2, 0.5 * spec[q]);
      deposit(-n_in / 2, 0.5 * spec[q]);
    } else {
      const int k = (2 * q < n_in) ? q : q - n_in;
      deposit(k, spec[q]);
    }
  }
  std::vector<cd> out(n_out);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft_1d(n_out, reinterpret_cast<fftw_complex*>(gspec.data()),
                            reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  for (auto& v : out) v /= static_cast<double>(n_out);
  return out;
}

}  // namespace

Field fourier_interpolate(const Field& u, const PeriodicGrid& grid_in, const PeriodicGrid& grid_out) {
  if (static_cast<std::size_t>(u.size()) != grid_in.size()) {
    throw DimensionError("fourier_interpolate: field does not match input grid");
  }
  if (grid_in.is_line() != grid_out.is_line()) {
    throw DimensionError("fourier_interpolate: cannot mix line and planar grids");
  }
  if (grid_in == grid_out) return u;
  const int nxi = grid_in.nx(), nyi = grid_in.ny();
  const int nxo = grid_out.nx(), nyo = grid_out.ny();

  // Resample rows (x), then columns (y).
  std::vector<cd> stage(static_cast<std::size_t>(nyi) * nxo);
  std::vector<cd> line(nxi);
  for (int j = 0; j < nyi; ++j) {
    for (int i = 0; i < nxi; ++i) line[i] = u[grid_in.index(i, j)];
    const auto r = resample_line(line, nxo);
    for (int i = 0; i < nxo; ++i) stage[static_cast<std::size_t>(j) * nxo + i] = r[i];
  }
  Field out(static_cast<Eigen::Index>(grid_out.size()));
  if (grid_in.is_line()) {
    for (int i = 0; i < nxo; ++i) out[i] = stage[i].real();
    return out;
  }
  std::vector<cd> col(nyi);
  for (int i = 0; i < nxo; ++i) {
    for (int j = 0; j < nyi; ++j) col[j] = stage[static_cast<std::size_t>(j) * nxo + i];
    const auto r = resample_line(col, nyo);
    for (int j = 0; j < nyo; ++j) out[grid_out.index(i, j)] = r[j].real();
  }
  return out;
}

}  // namespace tearfilm::spectral
