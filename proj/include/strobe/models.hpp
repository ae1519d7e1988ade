#pragma once

#include "strobe/common.hpp"
#include "strobe/mesh.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace strobe {

using SpaceTimeFlux = Eigen::Matrix<double, Eigen::Dynamic, 2, 0, 2, 2>;

struct ViscosityParams {
  double s0 = -2.5;
  double kappa = 1.5;
  double eps0 = 1e-2;      // ramp amplitude
  double eps_base = 5e-4;  // floor applied everywhere
};

/// Smooth ramp of the sub-cell shock capturing viscosity (without the floor).
double viscosity_ramp(double log10_s, const ViscosityParams& p);
double viscosity_ramp_slope(double log10_s, const ViscosityParams& p);

struct ParameterBox {
  Vector lo, hi;
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vector& mu, double tol = 1e-12) const;
  Vector centroid() const { return 0.5 * (lo + hi); }
  Vector normalize(const Vector& mu) const;
};

/// A 1D conservation law recast in space-time, dU/dt + df(U)/dx = S(U, x).
class ConservationLaw {
 public:
  virtual ~ConservationLaw() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual double length() const = 0;
  virtual double final_time() const = 0;

  virtual State flux(const State& U) const = 0;
  virtual StateMatrix flux_jacobian(const State& U) const = 0;
  virtual bool has_source() const { return false; }
  virtual State source(const State& U, double x) const;
  virtual StateMatrix source_jacobian(const State& U, double x) const;

  /// Largest |eigenvalue| of d(F n)/dU and its gradient with respect to U.
  virtual double max_speed(const State& U, const Vec2& n) const = 0;
  virtual State max_speed_gradient(const State& U, const Vec2& n) const = 0;

  /// Whether component comp is prescribed on the given side of the rectangle.
  virtual bool is_dirichlet(BoundarySide side, int comp) const = 0;
  /// Boundary data at physical point x (only Dirichlet components are used).
  virtual State dirichlet_value(BoundarySide side, const Vec2& x, const Vector& mu) const = 0;

  /// Throws DryState for inadmissible states.
  virtual void check_state(const State&) const {}
  /// Component used by the shock sensor and the registration sensor.
  virtual int sensor_component() const { return 0; }

  ViscosityParams viscosity;
  ParameterBox box;
};

using ModelPtr = std::shared_ptr<const ConservationLaw>;

/// Inviscid Burgers on (0,1) x (0,0.8) with a two-step inflow profile.
class Burgers : public ConservationLaw {
 public:
  Burgers();
  std::string name() const override { return "burgers"; }
  int dim() const override { return 1; }
  double length() const override { return 1.0; }
  double final_time() const override { return 0.8; }
  State flux(const State& U) const override;
  StateMatrix flux_jacobian(const State& U) const override;
  double max_speed(const State& U, const Vec2& n) const override;
  State max_speed_gradient(const State& U, const Vec2& n) const override;
  bool is_dirichlet(BoundarySide side, int comp) const override;
  State dirichlet_value(BoundarySide side, const Vec2& x, const Vector& mu) const override;

  static double initial_profile(double x, const Vector& mu);
};

/// Saint-Venant flow over a bump, U = [h, q].
class ShallowWater : public ConservationLaw {
 public:
  static constexpr double g = 9.81;
  static constexpr double q0 = 4.4;
  static constexpr double h_inf = 2.0;

  ShallowWater();
  std::string name() const override { return "shallow-water"; }
  int dim() const override { return 2; }
  double length() const override { return 25.0; }
  double final_time() const override { return 3.0; }
  State flux(const State& U) const override;
  StateMatrix flux_jacobian(const State& U) const override;
  bool has_source() const override { return true; }
  State source(const State& U, double x) const override;
  StateMatrix source_jacobian(const State& U, double x) const override;
  double max_speed(const State& U, const Vec2& n) const override;
  State max_speed_gradient(const State& U, const Vec2& n) const override;
  bool is_dirichlet(BoundarySide side, int comp) const override;
  State dirichlet_value(BoundarySide side, const Vec2& x, const Vector& mu) const override;
  void check_state(const State& U) const override;

  static double bathymetry(double x);
  static double bathymetry_slope(double x);
  static double inflow(double t, const Vector& mu);

  /// Steady base flow (long-time limit with constant inflow q0), linear interpolation.
  State base_flow(double x) const;
  const std::vector<double>& base_flow_cells_h() const { return base_h_; }
  double base_flow_residual() const { return base_residual_; }

 private:
  void compute_base_flow(int cells);
  std::vector<double> base_h_, base_q_;
  double base_dx_ = 0.0;
  double base_residual_ = 0.0;
};

/// Scalar transport with constant speed, used as a linear test problem.
class LinearAdvection : public ConservationLaw {
 public:
  using Profile = std::function<double(double x, double t)>;
  LinearAdvection(double a, double L, double T, Profile exact);
  std::string name() const override { return "linear-advection"; }
  int dim() const override { return 1; }
  double length() const override { return L_; }
  double final_time() const override { return T_; }
  State flux(const State& U) const override;
  StateMatrix flux_jacobian(const State& U) const override;
  double max_speed(const State& U, const Vec2& n) const override;
  State max_speed_gradient(const State& U, const Vec2& n) const override;
  bool is_dirichlet(BoundarySide side, int comp) const override;
  State dirichlet_value(BoundarySide side, const Vec2& x, const Vector& mu) const override;
  double speed() const { return a_; }
  const Profile& exact() const { return exact_; }

 private:
  double a_, L_, T_;
  Profile exact_;
};

/// "burgers" or "shallow-water".
ModelPtr make_model(const std::string& name);
/// Same, with the shock-capturing constants replaced.
ModelPtr make_model(const std::string& name, const ViscosityParams& v);

State physical_flux(const ConservationLaw& law, const State& U);
/// Space-time flux F(U) = [f(U), U].
SpaceTimeFlux spacetime_flux(const ConservationLaw& law, const State& U);

/// Rusanov flux 1/2 (F(U+) + F(U-)) n - tau/2 (U+ - U-), n pointing from U- to U+.
State rusanov_flux(const ConservationLaw& law, const State& Up, const State& Um, const Vec2& n);
/// Same flux together with its derivatives with respect to both states.
State rusanov_flux(const ConservationLaw& law, const State& Up, const State& Um, const Vec2& n,
                   StateMatrix& dUp, StateMatrix& dUm);

struct MappedFlux {
  SpaceTimeFlux F;  // g F G^{-T}
  State S;          // g S
};

/// Fluxes of the mapped problem; x is the physical abscissa Phi_1(X).
MappedFlux mapped_fluxes(const ConservationLaw& law, const State& U, const Mat2& G, double g, double x);

/// Per-element viscosity from the sensor component of a DG field.
Vector artificial_viscosity(const ConservationLaw& law, const SpaceTimeMesh& mesh, const Vector& coeffs);

}  // namespace strobe
