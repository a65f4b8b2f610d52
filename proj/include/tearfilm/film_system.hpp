#pragma once

#include <functional>
#include <vector>

#include "tearfilm/model.hpp"
#include "tearfilm/ndf.hpp"

namespace tearfilm::dae {

using model::FieldState;
using model::ModelParams;
using spectral::PeriodicGrid;

/// The (h, p, c) system on a periodic grid, stacked as y = [h; p; c].
/// h and c are differential, p is algebraic.
class FilmSystem : public DaeSystem {
 public:
  FilmSystem(const PeriodicGrid& grid, Field J, const ModelParams& params);

  Eigen::Index size() const override { return 3 * n_; }
  const std::vector<bool>& differential() const override { return mask_; }
  void rhs(double t, const Vector& y, Vector& f) override;

  void linearize(double t, const Vector& y, const Vector& f) override;
  /// Exact directional derivative of the discrete residual.
  void jvp(const Vector& v, Vector& out) override;
  /// Per-wavenumber 2x2 solve of the constant-coefficient linearization
  /// about the current means; exact for uniform states.
  void prepare_preconditioner(double gamma) override;
  void precondition(const Vector& r, Vector& z) override;
  /// Sets p = -lap(h).
  void make_consistent(double t, Vector& y) override;

  Vector pack(const FieldState& s) const;
  FieldState unpack(const Vector& y, double t) const;

  const PeriodicGrid& grid() const { return grid_; }
  const Field& evaporation() const { return J_; }
  const ModelParams& params() const { return params_; }

 private:
  PeriodicGrid grid_;
  const spectral::SpectralOps& ops_;
  Field J_;
  ModelParams params_;
  Eigen::Index n_;
  std::vector<bool> mask_;

  // Linearization data.
  Field h_, c_, px_, py_, cx_, cy_, u_, v_, a_, D_;
  // Preconditioner coefficients per spectrum entry.
  double ga_ = 0.0;  // gamma * reference mobility
  Eigen::ArrayXd m11_, m12_, m21_, m22_, det_;
};

/// Supplies (h, p, c) at time t to the fluorescein stage.
using FlowProvider = std::function<void(double t, Field& h, Field& p, Field& c)>;

/// The fluorescein equation alone, linear in f, with (h, p, c) prescribed.
class FluoresceinSystem : public DaeSystem {
 public:
  FluoresceinSystem(const PeriodicGrid& grid, Field J, const ModelParams& params,
                    FlowProvider flow);

  Eigen::Index size() const override { return n_; }
  const std::vector<bool>& differential() const override { return mask_; }
  void rhs(double t, const Vector& y, Vector& f) override;
  void linearize(double t, const Vector& y, const Vector& f) override;
  void jvp(const Vector& v, Vector& out) override;
  void prepare_preconditioner(double gamma) override;
  void precondition(const Vector& r, Vector& z) override;

 private:
  void load(double t);
  Field apply(const Field& f) const;

  PeriodicGrid grid_;
  const spectral::SpectralOps& ops_;
  Field J_;
  ModelParams params_;
  FlowProvider flow_;
  Eigen::Index n_;
  std::vector<bool> mask_;

  double loaded_t_ = 0.0;
  bool loaded_ = false;
  Field h_, u_, v_, react_;
  Eigen::ArrayXd diag_;
};

}  // namespace tearfilm::dae
