#include "strobe/models.hpp"

#include "strobe/dg.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace strobe {

double viscosity_ramp(double s, const ViscosityParams& p) {
  if (s < p.s0 - p.kappa) return 0.0;
  if (s >= p.s0 + p.kappa) return p.eps0;
  return 0.5 * p.eps0 * (1.0 + std::sin(std::numbers::pi * (s - p.s0) / (2.0 * p.kappa)));
}

double viscosity_ramp_slope(double s, const ViscosityParams& p) {
  if (s < p.s0 - p.kappa || s >= p.s0 + p.kappa) return 0.0;
  const double c = std::numbers::pi / (2.0 * p.kappa);
  return 0.5 * p.eps0 * c * std::cos(c * (s - p.s0));
}

bool ParameterBox::contains(const Vector& mu, double tol) const {
  if (mu.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double w = hi(i) - lo(i);
    if (mu(i) < lo(i) - tol * w || mu(i) > hi(i) + tol * w) return false;
  }
  return true;
}

Vector ParameterBox::normalize(const Vector& mu) const {
  return ((mu - lo).array() / (hi - lo).array()).matrix();
}

State ConservationLaw::source(const State& U, double) const { return State::Zero(U.size()); }

StateMatrix ConservationLaw::source_jacobian(const State& U, double) const {
  return StateMatrix::Zero(U.size(), U.size());
}

// ---------------------------------------------------------------- Burgers

Burgers::Burgers() {
  box.lo = Vector(2);
  box.hi = Vector(2);
  box.lo << 1.0, 0.25;
  box.hi << 1.3, 0.35;
}

double Burgers::initial_profile(double x, const Vector& mu) {
  const double nu = 260.0;
  auto H = [nu](double s) { return 1.0 / (1.0 + std::exp(-nu * s)); };
  return mu(0) * (2.0 - H(x - mu(1)) - H(x - 0.5)) + 0.3 * std::sin(std::numbers::pi * x);
}

State Burgers::flux(const State& U) const {
  State f(1);
  f(0) = 0.5 * U(0) * U(0);
  return f;
}

StateMatrix Burgers::flux_jacobian(const State& U) const {
  StateMatrix A(1, 1);
  A(0, 0) = U(0);
  return A;
}

double Burgers::max_speed(const State& U, const Vec2& n) const { return std::abs(U(0) * n.x() + n.y()); }

State Burgers::max_speed_gradient(const State& U, const Vec2& n) const {
  State d(1);
  const double s = U(0) * n.x() + n.y();
  d(0) = (s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0)) * n.x();
  return d;
}

bool Burgers::is_dirichlet(BoundarySide side, int) const {
  return side == BoundarySide::Bottom || side == BoundarySide::Left;
}

State Burgers::dirichlet_value(BoundarySide side, const Vec2& x, const Vector& mu) const {
  State u(1);
  u(0) = initial_profile(side == BoundarySide::Left ? 0.0 : x.x(), mu);
  return u;
}

// ---------------------------------------------------------------- shallow water

namespace {

struct BaseFlowCache {
  std::mutex m;
  std::vector<double> h, q;
  double residual = 0.0;
};

BaseFlowCache& base_cache() {
  static BaseFlowCache c;
  return c;
}

}  // namespace

ShallowWater::ShallowWater() {
  box.lo = Vector(2);
  box.hi = Vector(2);
  box.lo << 2.0, 0.1;
  box.hi << 8.0, 0.2;
  viscosity.eps0 = 0.5;
  viscosity.eps_base = 1e-2;
  compute_base_flow(2000);
}

double ShallowWater::bathymetry(double x) { return -0.2 + std::exp(-0.125 * std::pow(x - 10.0, 4)); }

double ShallowWater::bathymetry_slope(double x) {
  const double d = x - 10.0;
  return -0.5 * d * d * d * std::exp(-0.125 * d * d * d * d);
}

double ShallowWater::inflow(double t, const Vector& mu) {
  return q0 * (1.0 + mu(0) * t * std::exp(-(t - 0.05) * (t - 0.05) / (2.0 * mu(1) * mu(1))));
}

void ShallowWater::check_state(const State& U) const {
  if (!(U(0) > 0.0)) throw DryState("shallow water: nonpositive height");
}

State ShallowWater::flux(const State& U) const {
  check_state(U);
  State f(2);
  f(0) = U(1);
  f(1) = U(1) * U(1) / U(0) + 0.5 * g * U(0) * U(0);
  return f;
}

StateMatrix ShallowWater::flux_jacobian(const State& U) const {
  check_state(U);
  const double u = U(1) / U(0);
  StateMatrix A(2, 2);
  A << 0.0, 1.0, -u * u + g * U(0), 2.0 * u;
  return A;
}

State ShallowWater::source(const State& U, double x) const {
  State s(2);
  s(0) = 0.0;
  s(1) = -g * U(0) * bathymetry_slope(x);
  return s;
}

StateMatrix ShallowWater::source_jacobian(const State&, double x) const {
  StateMatrix J = StateMatrix::Zero(2, 2);
  J(1, 0) = -g * bathymetry_slope(x);
  return J;
}

double ShallowWater::max_speed(const State& U, const Vec2& n) const {
  check_state(U);
  const double s = U(1) / U(0) * n.x() + n.y();
  return std::abs(s) + std::sqrt(g * U(0)) * std::abs(n.x());
}

State ShallowWater::max_speed_gradient(const State& U, const Vec2& n) const {
  const double h = U(0);
  const double s = U(1) / h * n.x() + n.y();
  const double sg = s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
  State d(2);
  d(0) = sg * (-U(1) / (h * h)) * n.x() + 0.5 * std::sqrt(g / h) * std::abs(n.x());
  d(1) = sg * n.x() / h;
  return d;
}

bool ShallowWater::is_dirichlet(BoundarySide side, int comp) const {
  switch (side) {
    case BoundarySide::Bottom: return true;
    case BoundarySide::Left: return comp == 1;
    case BoundarySide::Right: return comp == 0;
    default: return false;
  }
}

State ShallowWater::dirichlet_value(BoundarySide side, const Vec2& x, const Vector& mu) const {
  switch (side) {
    case BoundarySide::Bottom: return base_flow(x.x());
    case BoundarySide::Left: {
      State u(2);
      u << 0.0, inflow(x.y(), mu);
      return u;
    }
    case BoundarySide::Right: {
      State u(2);
      u << h_inf, 0.0;
      return u;
    }
    default: return State::Zero(2);
  }
}

State ShallowWater::base_flow(double x) const {
  const int n = static_cast<int>(base_h_.size());
  const double s = std::clamp(x / base_dx_ - 0.5, 0.0, n - 1.0);
  const int i = std::min(static_cast<int>(s), n - 2);
  const double w = s - i;
  State u(2);
  u(0) = (1.0 - w) * base_h_[i] + w * base_h_[i + 1];
  u(1) = (1.0 - w) * base_q_[i] + w * base_q_[i + 1];
  return u;
}

void ShallowWater::compute_base_flow(int cells) {
  auto& cache = base_cache();
  std::lock_guard<std::mutex> lock(cache.m);
  const double L = length();
  base_dx_ = L / cells;
  if (static_cast<int>(cache.h.size()) == cells) {
    base_h_ = cache.h;
    base_q_ = cache.q;
    base_residual_ = cache.residual;
    return;
  }
  // First-order finite volumes with hydrostatic reconstruction, marched to steady state.
  const double dx = base_dx_;
  std::vector<double> b(cells + 2), h(cells + 2), q(cells + 2);
  for (int i = 0; i < cells + 2; ++i) {
    const double x = std::clamp((i - 0.5) * dx, 0.0, L);
    b[i] = bathymetry(x);
  }
  for (int i = 1; i <= cells; ++i) {
    h[i] = h_inf - b[i] - 0.2;
    q[i] = q0;
  }
  std::vector<double> fh(cells + 1), fqL(cells + 1), fqR(cells + 1);
  double residual = 1.0;
  for (long step = 0; step < 4000000 && residual > 1e-8; ++step) {
    h[0] = h[1];
    q[0] = q0;
    h[cells + 1] = h_inf;
    q[cells + 1] = q[cells];
    double smax = 0.0;
    for (int i = 0; i <= cells; ++i) {
      const double bs = std::max(b[i], b[i + 1]);
      const double hl = std::max(0.0, h[i] + b[i] - bs);
      const double hr = std::max(0.0, h[i + 1] + b[i + 1] - bs);
      const double ul = q[i] / h[i];
      const double ur = q[i + 1] / h[i + 1];
      const double ql = hl * ul, qr = hr * ur;
      const double cl = std::abs(ul) + std::sqrt(g * hl);
      const double cr = std::abs(ur) + std::sqrt(g * hr);
      const double tau = std::max(cl, cr);
      smax = std::max(smax, tau);
      fh[i] = 0.5 * (ql + qr) - 0.5 * tau * (hr - hl);
      const double fq = 0.5 * (ql * ul + 0.5 * g * hl * hl + qr * ur + 0.5 * g * hr * hr) - 0.5 * tau * (qr - ql);
      fqL[i] = fq + 0.5 * g * (h[i] * h[i] - hl * hl);
      fqR[i] = fq + 0.5 * g * (h[i + 1] * h[i + 1] - hr * hr);
    }
    const double dt = 0.9 * dx / smax;
    residual = 0.0;
    for (int i = 1; i <= cells; ++i) {
      const double dh = -(fh[i] - fh[i - 1]) / dx;
      const double dq = -(fqL[i] - fqR[i - 1]) / dx;
      h[i] += dt * dh;
      q[i] += dt * dq;
      if (!(h[i] > 0.0)) throw DryState("shallow water base flow became dry");
      residual = std::max({residual, std::abs(dh), std::abs(dq)});
    }
  }
  base_h_.assign(h.begin() + 1, h.end() - 1);
  base_q_.assign(q.begin() + 1, q.end() - 1);
  base_residual_ = residual;
  cache.h = base_h_;
  cache.q = base_q_;
  cache.residual = residual;
}

// ---------------------------------------------------------------- linear advection

LinearAdvection::LinearAdvection(double a, double L, double T, Profile exact)
    : a_(a), L_(L), T_(T), exact_(std::move(exact)) {
  box.lo = Vector::Zero(1);
  box.hi = Vector::Ones(1);
}

State LinearAdvection::flux(const State& U) const {
  State f(1);
  f(0) = a_ * U(0);
  return f;
}

StateMatrix LinearAdvection::flux_jacobian(const State&) const {
  StateMatrix A(1, 1);
  A(0, 0) = a_;
  return A;
}

double LinearAdvection::max_speed(const State&, const Vec2& n) const { return std::abs(a_ * n.x() + n.y()); }

State LinearAdvection::max_speed_gradient(const State&, const Vec2&) const { return State::Zero(1); }

bool LinearAdvection::is_dirichlet(BoundarySide side, int) const {
  if (side == BoundarySide::Bottom) return true;
  return a_ >= 0.0 ? side == BoundarySide::Left : side == BoundarySide::Right;
}

State LinearAdvection::dirichlet_value(BoundarySide, const Vec2& x, const Vector&) const {
  State u(1);
  u(0) = exact_(x.x(), x.y());
  return u;
}

// ---------------------------------------------------------------- free functions

ModelPtr make_model(const std::string& name) {
  if (name == "burgers") return std::make_shared<Burgers>();
  if (name == "shallow-water") return std::make_shared<ShallowWater>();
  throw ConfigError("unknown model '" + name + "'");
}

ModelPtr make_model(const std::string& name, const ViscosityParams& v) {
  std::shared_ptr<ConservationLaw> m;
  if (name == "burgers") m = std::make_shared<Burgers>();
  else if (name == "shallow-water") m = std::make_shared<ShallowWater>();
  else throw ConfigError("unknown model '" + name + "'");
  m->viscosity = v;
  return m;
}

State physical_flux(const ConservationLaw& law, const State& U) { return law.flux(U); }

SpaceTimeFlux spacetime_flux(const ConservationLaw& law, const State& U) {
  SpaceTimeFlux F(U.size(), 2);
  F.col(0) = law.flux(U);
  F.col(1) = U;
  return F;
}

State rusanov_flux(const ConservationLaw& law, const State& Up, const State& Um, const Vec2& n) {
  const double tau = std::max(law.max_speed(Up, n), law.max_speed(Um, n));
  return 0.5 * ((law.flux(Up) + law.flux(Um)) * n.x() + (Up + Um) * n.y()) - 0.5 * tau * (Up - Um);
}

State rusanov_flux(const ConservationLaw& law, const State& Up, const State& Um, const Vec2& n,
                   StateMatrix& dUp, StateMatrix& dUm) {
  const int D = static_cast<int>(Up.size());
  const double lp = law.max_speed(Up, n);
  const double lm = law.max_speed(Um, n);
  const double tau = std::max(lp, lm);
  const State jump = Up - Um;
  const StateMatrix I = StateMatrix::Identity(D, D);
  dUp = 0.5 * (law.flux_jacobian(Up) * n.x() + I * n.y()) - 0.5 * tau * I;
  dUm = 0.5 * (law.flux_jacobian(Um) * n.x() + I * n.y()) + 0.5 * tau * I;
  if (lp >= lm) {
    dUp -= 0.5 * jump * law.max_speed_gradient(Up, n).transpose();
  } else {
    dUm -= 0.5 * jump * law.max_speed_gradient(Um, n).transpose();
  }
  return 0.5 * ((law.flux(Up) + law.flux(Um)) * n.x() + (Up + Um) * n.y()) - 0.5 * tau * jump;
}

MappedFlux mapped_fluxes(const ConservationLaw& law, const State& U, const Mat2& G, double g, double x) {
  if (!(g > 0.0)) throw DegenerateMap("mapped flux with nonpositive Jacobian determinant");
  MappedFlux out;
  out.F = g * spacetime_flux(law, U) * G.inverse().transpose();
  out.S = g * law.source(U, x);
  return out;
}

Vector artificial_viscosity(const ConservationLaw& law, const SpaceTimeMesh& mesh, const Vector& coeffs) {
  const auto& ref = mesh.reference();
  const int n = ref.num_nodes();
  const int ne = mesh.num_elements();
  const int d = law.sensor_component();
  Vector eps(ne);
  for (int k = 0; k < ne; ++k) {
    const auto u = coeffs.segment(dof_index(mesh, 0, k, d), n);
    const double den = u.dot(ref.mass() * u);
    const double num = u.dot(ref.high_mode_form() * u);
    double ramp = 0.0;
    if (den > 0.0 && num > 0.0) ramp = viscosity_ramp(0.5 * std::log10(num / den), law.viscosity);
    eps(k) = law.viscosity.eps_base + ramp;
  }
  return eps;
}

}  // namespace strobe
