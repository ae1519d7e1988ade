#include "doctest.h"
#include "strobe/nnls.hpp"
#include "strobe/optimizer.hpp"
#include "strobe/regression.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace strobe;

namespace {

Matrix random_matrix(int m, int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix A(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = u(rng);
  return A;
}

// exhaustive search over supports
double brute_nnls(const Matrix& G, const Vector& b) {
  const int n = static_cast<int>(G.cols());
  double best = b.norm();
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> S;
    for (int j = 0; j < n; ++j)
      if (mask & (1 << j)) S.push_back(j);
    Matrix GS(G.rows(), S.size());
    for (std::size_t j = 0; j < S.size(); ++j) GS.col(j) = G.col(S[j]);
    const Vector z = GS.colPivHouseholderQr().solve(b);
    if (z.minCoeff() < 0.0) continue;
    best = std::min(best, (GS * z - b).norm());
  }
  return best;
}

}  // namespace

TEST_CASE("bfgs minimizes a quadratic and the Rosenbrock function") {
  Matrix A(3, 3);
  A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  Vector c(3);
  c << 1, -2, 0.5;
  const Objective quad = [&](const Vector& x, Vector* g) {
    if (g) *g = A * x - c;
    return 0.5 * x.dot(A * x) - c.dot(x);
  };
  const BfgsResult q = bfgs_minimize(quad, Vector::Zero(3));
  CHECK(q.converged);
  CHECK((q.x - A.ldlt().solve(c)).norm() < 1e-6);

  const Objective rosen = [](const Vector& x, Vector* g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    if (g) {
      g->resize(2);
      (*g)(0) = -2.0 * a - 400.0 * x(0) * b;
      (*g)(1) = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
  Vector x0(2);
  x0 << -1.2, 1.0;
  BfgsOptions o;
  o.max_iter = 500;
  const BfgsResult r = bfgs_minimize(rosen, x0, o);
  CHECK(std::abs(r.x(0) - 1.0) < 1e-4);
  CHECK(std::abs(r.x(1) - 1.0) < 1e-4);
}

TEST_CASE("bfgs stays inside the domain where the objective is finite") {
  const Objective barrier = [](const Vector& x, Vector* g) {
    if (x(0) <= 0.0) return std::numeric_limits<double>::infinity();
    if (g) *g = Vector::Constant(1, 1.0 - 1.0 / x(0));
    return x(0) - std::log(x(0));
  };
  const BfgsResult r = bfgs_minimize(barrier, Vector::Constant(1, 5.0));
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK_THROWS_AS(bfgs_minimize(barrier, Vector::Constant(1, -1.0)), InvalidArgument);
}

TEST_CASE("nnls matches an exhaustive support search") {
  for (unsigned seed = 1; seed <= 8; ++seed) {
    const Matrix G = random_matrix(9, 6, seed);
    const Vector b = random_matrix(9, 1, 100 + seed).col(0);
    NnlsOptions o;
    o.step_tol = 0.0;
    const NnlsResult r = nnls(G, b, o);
    CHECK(r.x.minCoeff() >= 0.0);
    CHECK(r.residual_norm == doctest::Approx(brute_nnls(G, b)).epsilon(1e-9));
    // KKT: multipliers nonpositive off the support, zero on it
    const Vector w = G.transpose() * (b - G * r.x);
    for (int j = 0; j < 6; ++j) {
      if (r.x(j) > 0.0) CHECK(std::abs(w(j)) < 1e-9);
      else CHECK(w(j) < 1e-9);
    }
  }
}

TEST_CASE("nnls recovers unit weights when they reproduce the data") {
  const Matrix G = random_matrix(30, 12, 7).cwiseAbs();
  const Vector b = G * Vector::Ones(12);
  NnlsOptions o;
  o.step_tol = 2.5e-11;
  const NnlsResult r = nnls(G, b, o);
  CHECK((r.x - Vector::Ones(12)).norm() < 1e-8);
  CHECK(r.residual_norm < 1e-9);
  CHECK_THROWS_AS(nnls(G, Vector::Ones(3)), InvalidArgument);
}

TEST_CASE("nnls with a looser step tolerance keeps fewer entries") {
  const Matrix G = random_matrix(40, 60, 3).cwiseAbs();
  const Vector b = G * Vector::Constant(60, 0.5);
  auto support = [&](double tol) {
    NnlsOptions o;
    o.step_tol = tol;
    const Vector x = nnls(G, b, o).x;
    return (x.array() > 0.0).count();
  };
  CHECK(support(1e-1) <= support(1e-12));
  CHECK(support(1e-12) <= 40);
}

TEST_CASE("thin-plate regression interpolates and reproduces linear data") {
  ParameterBox box{Vector::Zero(2), Vector::Ones(2)};
  box.lo << 0.5, 0.1;
  box.hi << 1.5, 0.4;
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix mus(2, 25), Y(3, 25);
  for (int j = 0; j < 25; ++j) {
    mus(0, j) = 0.5 + u(rng);
    mus(1, j) = 0.1 + 0.3 * u(rng);
    Y(0, j) = 2.0 + 3.0 * mus(0, j) - 5.0 * mus(1, j);             // linear
    Y(1, j) = std::sin(3.0 * mus(0, j)) * std::exp(mus(1, j));     // smooth
    Y(2, j) = 4.0;                                                 // constant
  }
  const RbfRegressor r = RbfRegressor::fit(box, mus, Y);
  CHECK(r.r2()(0) == doctest::Approx(1.0));
  CHECK(r.r2()(1) > 0.75);
  CHECK(r.r2()(2) == 0.0);
  CHECK(r.active()[0]);
  CHECK(r.active()[1]);
  CHECK(!r.active()[2]);
  for (int j = 0; j < 25; j += 6) CHECK(r.predict(mus.col(j))(1) == doctest::Approx(Y(1, j)).epsilon(1e-8));
  Vector mu(2);
  mu << 0.77, 0.33;
  const Vector p = r.predict(mu);
  CHECK(p(0) == doctest::Approx(2.0 + 3.0 * 0.77 - 5.0 * 0.33).epsilon(1e-9));
  CHECK(p(1) == doctest::Approx(std::sin(3.0 * 0.77) * std::exp(0.33)).epsilon(1e-2));
  CHECK(p(2) == doctest::Approx(4.0));
}

TEST_CASE("regression gates noise and rejects conflicting data") {
  ParameterBox box{Vector::Zero(2), Vector::Ones(2)};
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix mus(2, 30), Y(1, 30);
  for (int j = 0; j < 30; ++j) {
    mus(0, j) = u(rng);
    mus(1, j) = u(rng);
    Y(0, j) = u(rng);
  }
  const RbfRegressor r = RbfRegressor::fit(box, mus, Y);
  CHECK(r.r2()(0) < 0.75);
  CHECK(r.predict(mus.col(0))(0) == doctest::Approx(Y.row(0).mean()));
  // same seed, same result
  const RbfRegressor r2 = RbfRegressor::fit(box, mus, Y);
  CHECK(r2.r2()(0) == r.r2()(0));

  Matrix dup = mus;
  dup.col(1) = dup.col(0);
  Matrix Yd = Y;
  Yd(0, 1) = Yd(0, 0) + 1.0;
  CHECK_THROWS_AS(RbfRegressor::fit(box, dup, Yd), IllPosedData);
  Yd(0, 1) = Yd(0, 0);
  CHECK_NOTHROW(RbfRegressor::fit(box, dup, Yd));
}

TEST_CASE("r squared of a perfect and of a mean prediction") {
  Vector y(4);
  y << 1, 2, 3, 4;
  CHECK(r_squared(y, y, 2.5) == 1.0);
  CHECK(r_squared(y, Vector::Constant(4, 2.5), 2.5) == doctest::Approx(0.0));
  CHECK(r_squared(Vector::Constant(4, 1.0), y, 1.0) == 0.0);
}
