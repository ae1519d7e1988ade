#include "doctest.h"
#include "strobe/dg.hpp"
#include "strobe/models.hpp"

#include <cmath>
#include <random>

using namespace strobe;

namespace {

State st(double a) {
  State s(1);
  s << a;
  return s;
}

State st(double a, double b) {
  State s(2);
  s << a, b;
  return s;
}

}  // namespace

TEST_CASE("physical fluxes") {
  Burgers b;
  ShallowWater sw;
  CHECK(physical_flux(b, st(2.0))(0) == 2.0);
  const State f = physical_flux(sw, st(2.0, 0.0));
  CHECK(f(0) == 0.0);
  CHECK(f(1) == doctest::Approx(19.62));
  CHECK_THROWS_AS(physical_flux(sw, st(0.0, 1.0)), DryState);
  CHECK(ShallowWater::q0 == 4.4);
  const SpaceTimeFlux F = spacetime_flux(sw, st(1.5, 0.7));
  CHECK(F(0, 1) == 1.5);
  CHECK(F(1, 1) == 0.7);
}

TEST_CASE("flux jacobians match central differences") {
  ShallowWater sw;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uh(0.5, 3.0), uq(-4.0, 4.0);
  for (int s = 0; s < 20; ++s) {
    const State U = st(uh(rng), uq(rng));
    const StateMatrix A = sw.flux_jacobian(U);
    for (int j = 0; j < 2; ++j) {
      State e = State::Zero(2);
      const double h = 1e-6;
      e(j) = h;
      const State fd = (sw.flux(U + e) - sw.flux(U - e)) / (2 * h);
      CHECK((fd - A.col(j)).norm() <= 1e-6 * (1 + A.col(j).norm()));
    }
  }
}

TEST_CASE("rusanov flux") {
  Burgers b;
  CHECK(rusanov_flux(b, st(2.0), st(0.0), Vec2(1, 0))(0) == doctest::Approx(-1.0));
  // Temporal face: upwinding in time picks the minus state.
  CHECK(rusanov_flux(b, st(3.0), st(0.7), Vec2(0, 1))(0) == doctest::Approx(0.7));
  ShallowWater sw;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> uh(0.5, 3.0), uq(-4.0, 4.0), ang(0.0, 6.283);
  for (int s = 0; s < 20; ++s) {
    const State Up = st(uh(rng), uq(rng)), Um = st(uh(rng), uq(rng));
    const double a = ang(rng);
    const Vec2 n(std::cos(a), std::sin(a));
    const State H = rusanov_flux(sw, Up, Um, n);
    CHECK((H + rusanov_flux(sw, Um, Up, -n)).norm() < 1e-12);
    CHECK((rusanov_flux(sw, Up, Up, n) - spacetime_flux(sw, Up) * n).norm() < 1e-12);
    StateMatrix dp, dm;
    rusanov_flux(sw, Up, Um, n, dp, dm);
    for (int j = 0; j < 2; ++j) {
      State e = State::Zero(2);
      e(j) = 1e-6;
      const State fdp = (rusanov_flux(sw, Up + e, Um, n) - rusanov_flux(sw, Up - e, Um, n)) / 2e-6;
      const State fdm = (rusanov_flux(sw, Up, Um + e, n) - rusanov_flux(sw, Up, Um - e, n)) / 2e-6;
      CHECK((fdp - dp.col(j)).norm() <= 1e-6 * (1 + dp.norm()));
      CHECK((fdm - dm.col(j)).norm() <= 1e-6 * (1 + dm.norm()));
    }
  }
}

TEST_CASE("mapped fluxes") {
  ShallowWater sw;
  const State U = st(1.3, 0.4);
  const auto id = mapped_fluxes(sw, U, Mat2::Identity(), 1.0, 10.5);
  CHECK((id.F - spacetime_flux(sw, U)).norm() < 1e-14);
  CHECK((id.S - sw.source(U, 10.5)).norm() < 1e-14);
  const double a = 2.0, b = 0.5;
  Mat2 G;
  G << a, 0, 0, b;
  const auto dil = mapped_fluxes(sw, U, G, a * b, 10.5);
  const SpaceTimeFlux F = spacetime_flux(sw, U);
  CHECK((dil.F.col(0) - b * F.col(0)).norm() < 1e-14);
  CHECK((dil.F.col(1) - a * F.col(1)).norm() < 1e-14);
  CHECK_THROWS_AS(mapped_fluxes(sw, U, G, 0.0, 1.0), DegenerateMap);
}

TEST_CASE("viscosity ramp") {
  ViscosityParams p;
  CHECK(viscosity_ramp(p.s0, p) == doctest::Approx(p.eps0 / 2));
  CHECK(viscosity_ramp(p.s0 + p.kappa, p) == p.eps0);
  CHECK(viscosity_ramp(0.0, p) == p.eps0);
  CHECK(viscosity_ramp(p.s0 - p.kappa - 0.1, p) == 0.0);
  Burgers b;
  const auto mesh = build_structured_mesh(1.0, 0.8, 4, 4, 2);
  const Vector lin = interpolate(*mesh, 1, [](const Vec2& x) { return st(1.0 + x.x()); });
  const Vector eps = artificial_viscosity(b, *mesh, lin);
  CHECK((eps.array() == b.viscosity.eps_base).all());
  const Vector zero = Vector::Zero(lin.size());
  CHECK((artificial_viscosity(b, *mesh, zero).array() == b.viscosity.eps_base).all());
  const Vector step = interpolate(*mesh, 1, [](const Vec2& x) { return st(x.x() < 0.3 ? 2.0 : 0.5); });
  CHECK(artificial_viscosity(b, *mesh, step).maxCoeff() > b.viscosity.eps_base + 0.5 * b.viscosity.eps0);
}

TEST_CASE("shallow water data") {
  CHECK(ShallowWater::bathymetry(10.0) == doctest::Approx(0.8));
  CHECK(ShallowWater::bathymetry(0.0) == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(ShallowWater::bathymetry(25.0) == doctest::Approx(-0.2).epsilon(1e-12));
  const double x = 11.3, h = 1e-6;
  CHECK(ShallowWater::bathymetry_slope(x) ==
        doctest::Approx((ShallowWater::bathymetry(x + h) - ShallowWater::bathymetry(x - h)) / (2 * h)).epsilon(1e-6));
  ShallowWater sw;
  CHECK(sw.sensor_component() == 0);
  CHECK(sw.base_flow_residual() <= 1e-8);
  // Discharge is uniform at steady state and the flow passes through critical depth.
  const double hc = std::cbrt(ShallowWater::q0 * ShallowWater::q0 / ShallowWater::g);
  double hmin = 1e9;
  for (double xx = 0.0; xx <= 24.0; xx += 0.25) {
    const State u = sw.base_flow(xx);
    CHECK(u(1) == doctest::Approx(ShallowWater::q0).epsilon(2e-2));
    hmin = std::min(hmin, u(0));
  }
  // Subcritical upstream of the bump, supercritical downstream.
  CHECK(sw.base_flow(1.0)(0) > hc);
  CHECK(sw.base_flow(20.0)(0) < hc);
  CHECK(hmin < hc);
  Vector mu(2);
  mu << 2.0, 0.1;
  CHECK(ShallowWater::inflow(0.0, mu) == doctest::Approx(4.4));
  CHECK(ShallowWater::inflow(0.05, mu) == doctest::Approx(4.4 * (1 + 2 * 0.05)));
}
