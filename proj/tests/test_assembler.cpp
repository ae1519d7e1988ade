#include "doctest.h"
#include "strobe/assembler.hpp"

#include <cmath>
#include <random>

using namespace strobe;

namespace {

std::shared_ptr<const SpaceTimeMesh> small_mesh(double L, double T, int nx, int nt, int p = 2) {
  return build_structured_mesh(L, T, nx, nt, p);
}

Vector random_vector(Eigen::Index n, unsigned seed, double amp) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// A smooth map with a few modes switched on.
Vector some_map(const MapSpace& space, double amp) {
  Vector a = Vector::Zero(space.size());
  a(0) = amp;
  a(1) = -0.5 * amp;
  a(space.size() / 2) = 0.3 * amp;
  a(space.size() / 2 + space.mbar()) = -0.2 * amp;
  return a;
}

double fd_mismatch(const Assembler& as, const Vector& w, const AssemblyOptions& base, unsigned seed) {
  Vector eps = as.viscosity(w);
  AssemblyOptions opts = base;
  opts.viscosity = &eps;
  Vector R;
  SparseMatrix J;
  as.residual_and_jacobian(w, R, J, opts);
  const Vector dir = random_vector(w.size(), seed, 1.0);
  const double h = 1e-6;
  const Vector fd = (as.residual(w + h * dir, opts) - as.residual(w - h * dir, opts)) / (2.0 * h);
  const Vector an = J * dir;
  return (fd - an).norm() / an.norm();
}

}  // namespace

TEST_CASE("burgers jacobian matches central differences") {
  auto mesh = small_mesh(1.0, 0.8, 6, 5);
  auto law = make_model("burgers");
  Assembler as(law, mesh);
  Vector mu(2);
  mu << 1.15, 0.3;
  as.set_parameter(mu);
  const Vector w = interpolate(*mesh, 1, [&](const Vec2& x) {
    State u(1);
    u(0) = 1.0 + 0.3 * std::sin(3.0 * x.x() + x.y());
    return u;
  }) + random_vector(as.size(), 3, 0.05);
  CHECK(fd_mismatch(as, w, {}, 11) < 1e-6);

  MapSpace space(3, 1.0, 0.8);
  GeometryBasis basis(*mesh, space, Matrix::Identity(space.size(), space.size()));
  const MapGeometry geo = basis.geometry(some_map(space, 0.05));
  AssemblyOptions opts;
  opts.geometry = &geo;
  CHECK(fd_mismatch(as, w, opts, 12) < 1e-6);
}

TEST_CASE("shallow-water jacobian matches central differences") {
  auto law = make_model("shallow-water");
  auto mesh = small_mesh(law->length(), law->final_time(), 6, 4);
  Assembler as(law, mesh);
  Vector mu(2);
  mu << 5.0, 0.15;
  as.set_parameter(mu);
  const auto* sw = dynamic_cast<const ShallowWater*>(law.get());
  REQUIRE(sw);
  const Vector w = interpolate(*mesh, 2, [&](const Vec2& x) { return sw->base_flow(x.x()); }) +
                   random_vector(as.size(), 5, 0.02);
  MapSpace space(2, law->length(), law->final_time());
  GeometryBasis basis(*mesh, space, Matrix::Identity(space.size(), space.size()));
  const MapGeometry geo = basis.geometry(some_map(space, 0.5));
  AssemblyOptions opts;
  opts.geometry = &geo;
  CHECK(fd_mismatch(as, w, {}, 21) < 1e-6);
  CHECK(fd_mismatch(as, w, opts, 22) < 1e-6);
}

TEST_CASE("zero map reproduces the identity geometry") {
  auto mesh = small_mesh(1.0, 0.8, 4, 3);
  MapSpace space(3, 1.0, 0.8);
  GeometryBasis basis(*mesh, space, Matrix::Identity(space.size(), space.size()));
  const MapGeometry a = basis.geometry(Vector::Zero(space.size()));
  const MapGeometry b = identity_geometry(*mesh);
  for (std::size_t i = 0; i < a.A.size(); ++i) {
    CHECK((a.A[i] - b.A[i]).norm() < 1e-14);
    CHECK(a.x[i] == doctest::Approx(b.x[i]));
  }
  for (std::size_t i = 0; i < a.scale.size(); ++i) {
    CHECK(a.scale[i] == doctest::Approx(1.0));
    CHECK((a.normal[i] - b.normal[i]).norm() < 1e-14);
  }
  CHECK_THROWS_AS(basis.geometry(Vector::Zero(3)), InvalidArgument);
  Vector bad = Vector::Zero(space.size());
  bad(0) = -50.0;
  CHECK_THROWS_AS(basis.geometry(bad), DegenerateMap);
}

TEST_CASE("constant states are steady in reference and mapped configurations") {
  auto mesh = small_mesh(1.0, 1.0, 5, 5, 3);
  auto adv = std::make_shared<LinearAdvection>(0.7, 1.0, 1.0, [](double, double) { return 2.0; });
  Assembler as(adv, mesh);
  const Vector w = Vector::Constant(as.size(), 2.0);
  CHECK(as.residual(w).lpNorm<Eigen::Infinity>() < 1e-12);
  // Mapped: the discrete metric identities hold up to quadrature error.
  MapSpace space(2, 1.0, 1.0);
  GeometryBasis basis(*mesh, space, Matrix::Identity(space.size(), space.size()));
  const MapGeometry geo = basis.geometry(some_map(space, 0.05));
  AssemblyOptions opts;
  opts.geometry = &geo;
  CHECK(as.residual(w, opts).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("mapped residual is consistent with the pulled-back exact solution") {
  // u(x,t) = sin(2 pi (x - a t)) solves the advection problem in the physical
  // domain; its pull-back through a boundary-preserving map must nearly zero
  // the mapped residual, at the same rate as in the reference configuration.
  const double a = 0.6;
  auto exact = [a](double x, double t) { return std::sin(2.0 * M_PI * (x - a * t)); };
  auto adv = std::make_shared<LinearAdvection>(a, 1.0, 1.0, exact);
  adv->viscosity.eps_base = 0.0;
  adv->viscosity.eps0 = 0.0;
  MapSpace space(2, 1.0, 1.0);
  const Vector coeff = some_map(space, 0.3);
  double prev_ref = 0.0, prev_map = 0.0;
  for (int nx : {4, 8}) {
    auto mesh = small_mesh(1.0, 1.0, nx, nx, 2);
    Assembler as(adv, mesh);
    GeometryBasis basis(*mesh, space, Matrix::Identity(space.size(), space.size()));
    const MapGeometry geo = basis.geometry(coeff);
    AssemblyOptions opts;
    opts.geometry = &geo;
    const Vector w_ref = interpolate(*mesh, 1, [&](const Vec2& X) {
      State u(1);
      u(0) = exact(X.x(), X.y());
      return u;
    });
    const Vector w_map = interpolate(*mesh, 1, [&](const Vec2& X) {
      const Vec2 x = space.apply(coeff, X);
      State u(1);
      u(0) = exact(x.x(), x.y());
      return u;
    });
    const double r_ref = as.residual(w_ref).norm();
    const double r_map = as.residual(w_map, opts).norm();
    // A wrong pull-back (unmapped field in the mapped geometry) is far off.
    const double r_bad = as.residual(w_ref, opts).norm();
    CHECK(r_map < 0.2 * r_bad);
    if (prev_ref > 0.0) {
      CHECK(r_ref < 0.3 * prev_ref);
      CHECK(r_map < 0.3 * prev_map);
    }
    prev_ref = r_ref;
    prev_map = r_map;
  }
}

TEST_CASE("element subsets and weights add up") {
  auto mesh = small_mesh(1.0, 0.8, 5, 4);
  auto law = make_model("burgers");
  Assembler as(law, mesh);
  Vector mu(2);
  mu << 1.2, 0.28;
  as.set_parameter(mu);
  const Vector w = Vector::Ones(as.size()) + random_vector(as.size(), 7, 0.2);
  const Vector eps = as.viscosity(w);
  AssemblyOptions all;
  all.viscosity = &eps;
  Vector R;
  SparseMatrix J;
  as.residual_and_jacobian(w, R, J, all);

  std::vector<int> first, second;
  for (int k = 0; k < mesh->num_elements(); ++k) (k % 3 == 0 ? first : second).push_back(k);
  AssemblyOptions o1 = all, o2 = all;
  o1.elements = &first;
  o2.elements = &second;
  Vector R1, R2;
  SparseMatrix J1, J2;
  as.residual_and_jacobian(w, R1, J1, o1);
  as.residual_and_jacobian(w, R2, J2, o2);
  CHECK((R1 + R2 - R).norm() < 1e-12 * R.norm());
  CHECK(SparseMatrix(J1 + J2 - J).norm() < 1e-12 * J.norm());

  const Vector ones = Vector::Ones(mesh->num_elements());
  AssemblyOptions ow = all;
  ow.weights = &ones;
  CHECK((as.residual(w, ow) - R).norm() == 0.0);
  const Vector twos = 2.0 * ones;
  ow.weights = &twos;
  CHECK((as.residual(w, ow) - 2.0 * R).norm() < 1e-12 * R.norm());

  // Viscosity computed on the halo matches the global one there.
  const auto h = as.halo(first);
  const Vector eh = as.viscosity(w, &h);
  for (int k : h) CHECK(eh(k) == eps(k));

  // Each element couples only to itself and its facet neighbours.
  const int n = mesh->nodes_per_element();
  for (int k = 0; k < J.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(J, k); it; ++it) {
      const int er = static_cast<int>(it.row() % (n * mesh->num_elements())) / n;
      const int ec = static_cast<int>(it.col() % (n * mesh->num_elements())) / n;
      bool ok = er == ec;
      for (int e = 0; e < 3; ++e) ok = ok || mesh->neighbor(er, e) == ec;
      CHECK(ok);
    }
}

TEST_CASE("linear advection jacobian does not depend on the state") {
  auto mesh = small_mesh(1.0, 1.0, 4, 4);
  auto adv = std::make_shared<LinearAdvection>(-0.4, 1.0, 1.0, [](double x, double t) { return x + t; });
  Assembler as(adv, mesh);
  const Vector eps = Vector::Constant(mesh->num_elements(), 1e-3);
  AssemblyOptions opts;
  opts.viscosity = &eps;
  Vector R1, R2;
  SparseMatrix J1, J2;
  as.residual_and_jacobian(random_vector(as.size(), 1, 1.0), R1, J1, opts);
  as.residual_and_jacobian(random_vector(as.size(), 2, 1.0), R2, J2, opts);
  CHECK(SparseMatrix(J1 - J2).norm() < 1e-12 * J1.norm());
}

TEST_CASE("jacobian with the viscosity derivative matches central differences") {
  auto mesh = small_mesh(1.0, 0.8, 6, 5);
  auto law = make_model("burgers");
  Assembler as(law, mesh);
  Vector mu(2);
  mu << 1.15, 0.3;
  as.set_parameter(mu);
  // steep enough that many elements sit on the viscosity ramp
  const Vector w = interpolate(*mesh, 1, [&](const Vec2& x) {
    State u(1);
    u(0) = 1.0 + 0.5 * std::tanh(12.0 * (x.x() - 0.5 - 0.3 * x.y()));
    return u;
  }) + random_vector(as.size(), 9, 0.01);
  const Vector eps = as.viscosity(w);
  int on_ramp = 0;
  for (int k = 0; k < mesh->num_elements(); ++k) on_ramp += as.viscosity_gradient(w, k).norm() > 0.0;
  CHECK(on_ramp > 5);
  AssemblyOptions opts;
  opts.viscosity_derivative = true;
  Vector R;
  SparseMatrix J;
  as.residual_and_jacobian(w, R, J, opts);
  const Vector dir = random_vector(w.size(), 4, 1.0);
  const double h = 1e-6;
  const Vector fd = (as.residual(w + h * dir) - as.residual(w - h * dir)) / (2.0 * h);
  CHECK((fd - J * dir).norm() < 1e-6 * fd.norm());
}
