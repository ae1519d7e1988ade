#include "doctest.h"
#include "strobe/geometry_maps.hpp"
#include "strobe/quadrature.hpp"

#include <cmath>
#include <random>

using namespace strobe;

namespace {

Vector random_coeffs(int n, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Vector a(n);
  for (int i = 0; i < n; ++i) a(i) = nd(rng);
  return a;
}

}  // namespace

TEST_CASE("shifted legendre polynomials are orthonormal on (0,1)") {
  const auto gl = gauss_legendre(10);
  const int n = 6;
  Matrix G = Matrix::Zero(n, n);
  std::vector<double> v(n), d1(n), d2(n);
  for (std::size_t q = 0; q < gl.size(); ++q) {
    shifted_legendre(n, gl.points[q].x(), v.data(), d1.data(), d2.data());
    const Eigen::Map<Vector> vv(v.data(), n);
    G += gl.weights[q] * vv * vv.transpose();
  }
  CHECK((G - Matrix::Identity(n, n)).norm() < 1e-12);
  // Derivatives against finite differences.
  const double s = 0.37, h = 1e-5;
  std::vector<double> vp(n), vm(n), dp(n), dm(n), t(n);
  shifted_legendre(n, s + h, vp.data(), dp.data(), t.data());
  shifted_legendre(n, s - h, vm.data(), dm.data(), t.data());
  shifted_legendre(n, s, v.data(), d1.data(), d2.data());
  for (int i = 0; i < n; ++i) {
    CHECK(d1[i] == doctest::Approx((vp[i] - vm[i]) / (2 * h)).epsilon(1e-6));
    CHECK(d2[i] == doctest::Approx((dp[i] - dm[i]) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("map space dimension and boundary conditions") {
  const MapSpace space(8, 1.0, 0.8);
  CHECK(space.size() == 128);
  const Vector a = random_coeffs(space.size(), 0.05, 1);
  for (double s : {0.0, 0.13, 0.5, 0.91, 1.0}) {
    Vec2 phi;
    Mat2 grad;
    space.evaluate(a, Vec2(0.0, 0.8 * s), phi, grad);
    CHECK(std::abs(phi.x()) < 1e-14);
    space.evaluate(a, Vec2(1.0, 0.8 * s), phi, grad);
    CHECK(std::abs(phi.x()) < 1e-14);
    space.evaluate(a, Vec2(s, 0.0), phi, grad);
    CHECK(std::abs(phi.y()) < 1e-14);
    space.evaluate(a, Vec2(s, 0.8), phi, grad);
    CHECK(std::abs(phi.y()) < 1e-14);
  }
  for (const Vec2& c : {Vec2(0, 0), Vec2(1, 0), Vec2(1, 0.8), Vec2(0, 0.8)}) CHECK((space.apply(a, c) - c).norm() < 1e-14);
}

TEST_CASE("map jacobian") {
  const MapSpace space(4, 25.0, 3.0);
  const auto [G0, g0] = map_jacobian(space, Vector::Zero(space.size()), Vec2(3.0, 1.0));
  CHECK((G0 - Mat2::Identity()).norm() == 0.0);
  CHECK(g0 == 1.0);
  const Vector a = random_coeffs(space.size(), 0.3, 2);
  const Vec2 X(7.3, 1.1);
  const auto [G, g] = map_jacobian(space, a, X);
  const double hx = 1e-6 * 25.0, ht = 1e-6 * 3.0;
  Mat2 fd;
  fd.col(0) = (space.apply(a, X + Vec2(hx, 0)) - space.apply(a, X - Vec2(hx, 0))) / (2 * hx);
  fd.col(1) = (space.apply(a, X + Vec2(0, ht)) - space.apply(a, X - Vec2(0, ht))) / (2 * ht);
  CHECK(fd.determinant() == doctest::Approx(g).epsilon(1e-6));
  CHECK((fd - G).norm() < 1e-6 * G.norm());
}

TEST_CASE("bijectivity functional") {
  const MapSpace space(8, 1.0, 0.8);
  const BijectivityParams params;
  const Vector zero = Vector::Zero(space.size());
  const double f0 = bijectivity_functional(space, zero, params);
  CHECK(f0 == doctest::Approx(0.8 * 2.0 * std::exp(-360.0)).epsilon(1e-8));
  BijectivityFunctional bf(space, params);
  CHECK(bf.budget() == doctest::Approx(0.8));
  CHECK(bf.admissible(zero));
  // Scaling a mode up eventually folds the map and the functional explodes.
  Vector a = zero;
  double prev = 0.0;
  bool rejected = false;
  for (double s = 0.0; s <= 2.0; s += 0.05) {
    a(1) = s;
    const double f = bf.value(a);
    CHECK(f >= prev * (1 - 1e-12));
    prev = f;
    if (!bf.admissible(a)) {
      rejected = true;
      CHECK(bf.min_jacobian(a) < 0.2);
    }
  }
  CHECK(rejected);
  // Gradient against finite differences.
  const Vector b = random_coeffs(space.size(), 0.01, 3);
  Vector grad;
  BijectivityParams soft;
  soft.c_exp = 0.05;
  BijectivityFunctional bs(space, soft);
  bs.value(b, grad);
  for (int m : {0, 5, 70, 127}) {
    Vector e = Vector::Zero(space.size());
    e(m) = 1e-6;
    const double fd = (bs.value(b + e) - bs.value(b - e)) / 2e-6;
    CHECK(grad(m) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("h2 penalty") {
  const MapSpace space(3, 1.0, 0.8);
  const Matrix A = h2_penalty_matrix(space);
  CHECK((A - A.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(Vector::Zero(space.size()).dot(A * Vector::Zero(space.size())) == 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
  CHECK(eig.eigenvalues().minCoeff() > -1e-10 * eig.eigenvalues().maxCoeff());
  // Oracle: high-order tensor rule of the Hessian of a single mode.
  const auto gl = gauss_legendre(12);
  const int m = 2 + 3 * 1;  // first component, x-degree 2, t-degree 1
  const int n = space.size();
  std::vector<double> v(n), dx(n), dt(n), dxx(n), dxt(n), dtt(n);
  double oracle = 0.0;
  for (std::size_t j = 0; j < gl.size(); ++j)
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const Vec2 X(gl.points[i].x(), 0.8 * gl.points[j].x());
      space.modes_at(X, v.data(), dx.data(), dt.data(), dxx.data(), dxt.data(), dtt.data());
      oracle += gl.weights[i] * gl.weights[j] * 0.8 * (dxx[m] * dxx[m] + 2 * dxt[m] * dxt[m] + dtt[m] * dtt[m]);
    }
  CHECK(A(m, m) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("deform mesh") {
  const auto mesh = build_structured_mesh(1.0, 0.8, 4, 4, 2);
  const MapSpace space(3, 1.0, 0.8);
  const auto same = deform_mesh(mesh, space, Vector::Zero(space.size()));
  for (std::size_t i = 0; i < same.nodes.size(); ++i) CHECK((same.nodes[i] - mesh->nodes()[i]).norm() == 0.0);
  Vector a = Vector::Zero(space.size());
  a(0) = 0.05;
  const auto moved = deform_mesh(mesh, space, a);
  int shifted = 0;
  for (std::size_t i = 0; i < moved.nodes.size(); ++i) {
    const Vec2& X = mesh->nodes()[i];
    if (X.x() == 0.0) CHECK(moved.nodes[i].x() == 0.0);
    if (X.x() > 0.0 && X.x() < 1.0) shifted += (moved.nodes[i] - X).norm() > 0 ? 1 : 0;
    CHECK(moved.nodes[i].x() >= 0.0);
    CHECK(moved.nodes[i].x() <= 1.0);
  }
  CHECK(shifted > 0);
  CHECK(star_inner_product(a, a) == doctest::Approx(0.0025));
  CHECK_THROWS_AS(star_inner_product(a, Vector::Zero(3)), InvalidArgument);
}
