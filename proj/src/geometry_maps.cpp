#include "strobe/geometry_maps.hpp"

#include "strobe/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace strobe {

void shifted_legendre(int n, double s, double* value, double* d1, double* d2) {
  // Recurrences for P_k, P_k', P_k'' on [-1,1], then the chain rule x = 2s - 1.
  const double x = 2.0 * s - 1.0;
  double p0 = 1.0, p1 = x, dp0 = 0.0, dp1 = 1.0, ddp0 = 0.0, ddp1 = 0.0;
  for (int k = 0; k < n; ++k) {
    double p, dp, ddp;
    if (k == 0) {
      p = 1.0, dp = 0.0, ddp = 0.0;
    } else if (k == 1) {
      p = x, dp = 1.0, ddp = 0.0;
    } else {
      p = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      dp = dp0 + (2.0 * k - 1.0) * p1;
      ddp = ddp0 + (2.0 * k - 1.0) * dp1;
      p0 = p1, p1 = p;
      dp0 = dp1, dp1 = dp;
      ddp0 = ddp1, ddp1 = ddp;
    }
    const double c = std::sqrt(2.0 * k + 1.0);
    value[k] = c * p;
    if (d1) d1[k] = 2.0 * c * dp;
    if (d2) d2[k] = 4.0 * c * ddp;
  }
}

MapSpace::MapSpace(int Mbar, double L, double T) : mbar_(Mbar), L_(L), T_(T) {
  if (Mbar < 1) throw InvalidArgument("map space needs at least one Legendre mode");
  if (!(L > 0.0 && T > 0.0)) throw InvalidArgument("map space extents must be positive");
}

void MapSpace::modes_at(const Vec2& X, double* value, double* dx, double* dt, double* dxx, double* dxt,
                        double* dtt) const {
  const int M = mbar_;
  std::vector<double> lx(M), dlx(M), ddlx(M), lt(M), dlt(M), ddlt(M);
  const double sx = X.x() / L_, st = X.y() / T_;
  shifted_legendre(M, sx, lx.data(), dlx.data(), ddlx.data());
  shifted_legendre(M, st, lt.data(), dlt.data(), ddlt.data());
  // Boundary factors and their derivatives in physical units.
  const double bx = sx * (1.0 - sx), dbx = (1.0 - 2.0 * sx) / L_, ddbx = -2.0 / (L_ * L_);
  const double bt = st * (1.0 - st), dbt = (1.0 - 2.0 * st) / T_, ddbt = -2.0 / (T_ * T_);
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) {
      const int m = i + j * M;
      // First component: lx_i(sx) lt_j(st) bx(sx).
      {
        const double P = lx[i] * bx;
        const double dP = dlx[i] / L_ * bx + lx[i] * dbx;
        const double ddP = ddlx[i] / (L_ * L_) * bx + 2.0 * dlx[i] / L_ * dbx + lx[i] * ddbx;
        const double Q = lt[j], dQ = dlt[j] / T_, ddQ = ddlt[j] / (T_ * T_);
        value[m] = P * Q;
        dx[m] = dP * Q;
        dt[m] = P * dQ;
        if (dxx) {
          dxx[m] = ddP * Q;
          dxt[m] = dP * dQ;
          dtt[m] = P * ddQ;
        }
      }
      // Second component: lx_i(sx) lt_j(st) bt(st).
      {
        const int m2 = m + M * M;
        const double P = lx[i], dP = dlx[i] / L_, ddP = ddlx[i] / (L_ * L_);
        const double Q = lt[j] * bt;
        const double dQ = dlt[j] / T_ * bt + lt[j] * dbt;
        const double ddQ = ddlt[j] / (T_ * T_) * bt + 2.0 * dlt[j] / T_ * dbt + lt[j] * ddbt;
        value[m2] = P * Q;
        dx[m2] = dP * Q;
        dt[m2] = P * dQ;
        if (dxx) {
          dxx[m2] = ddP * Q;
          dxt[m2] = dP * dQ;
          dtt[m2] = P * ddQ;
        }
      }
    }
  }
}

void MapSpace::evaluate(const Vector& a, const Vec2& X, Vec2& phi, Mat2& grad) const {
  if (a.size() != size()) throw InvalidArgument("displacement coefficients do not match the map space");
  const int n = size();
  std::vector<double> v(n), dx(n), dt(n);
  modes_at(X, v.data(), dx.data(), dt.data());
  phi.setZero();
  grad.setZero();
  for (int m = 0; m < n; ++m) {
    const int c = component(m);
    phi(c) += a(m) * v[m];
    grad(c, 0) += a(m) * dx[m];
    grad(c, 1) += a(m) * dt[m];
  }
}

Vec2 MapSpace::apply(const Vector& a, const Vec2& X) const {
  Vec2 phi;
  Mat2 grad;
  evaluate(a, X, phi, grad);
  return X + phi;
}

Matrix MapSpace::values_at(const std::vector<Vec2>& points) const {
  const int n = size();
  Matrix out(points.size(), n);
  parallel_for(points.size(), [&](std::size_t p) {
    std::vector<double> v(n), dx(n), dt(n);
    modes_at(points[p], v.data(), dx.data(), dt.data());
    for (int m = 0; m < n; ++m) out(static_cast<Eigen::Index>(p), m) = v[m];
  });
  return out;
}

void MapSpace::gradients_at(const std::vector<Vec2>& points, Matrix& gx, Matrix& gt) const {
  const int n = size();
  gx.resize(points.size(), n);
  gt.resize(points.size(), n);
  parallel_for(points.size(), [&](std::size_t p) {
    std::vector<double> v(n), dx(n), dt(n);
    modes_at(points[p], v.data(), dx.data(), dt.data());
    for (int m = 0; m < n; ++m) {
      gx(static_cast<Eigen::Index>(p), m) = dx[m];
      gt(static_cast<Eigen::Index>(p), m) = dt[m];
    }
  });
}

std::pair<Mat2, double> map_jacobian(const MapSpace& space, const Vector& a, const Vec2& X) {
  Vec2 phi;
  Mat2 grad;
  space.evaluate(a, X, phi, grad);
  const Mat2 G = Mat2::Identity() + grad;
  return {G, G.determinant()};
}

// ---------------------------------------------------------------- bijectivity

BijectivityFunctional::BijectivityFunctional(const MapSpace& space, BijectivityParams params, int cells,
                                             int order)
    : space_(space), params_(params) {
  const double L = space.length(), T = space.final_time();
  delta_ = params.delta > 0.0 ? params.delta : L * T;
  const auto gl = gauss_legendre(order);
  std::vector<Vec2> pts;
  const double hx = L / cells, ht = T / cells;
  for (int cj = 0; cj < cells; ++cj)
    for (int ci = 0; ci < cells; ++ci)
      for (std::size_t qj = 0; qj < gl.size(); ++qj)
        for (std::size_t qi = 0; qi < gl.size(); ++qi) {
          pts.emplace_back((ci + gl.points[qi].x()) * hx, (cj + gl.points[qj].x()) * ht);
          weights_.push_back(gl.weights[qi] * gl.weights[qj] * hx * ht);
        }
  space.gradients_at(pts, dx_, dt_);
}

namespace {

constexpr double kExpClamp = 700.0;

double clamped_exp(double s) { return std::exp(std::min(s, kExpClamp)); }

}  // namespace

double BijectivityFunctional::value(const Vector& a) const {
  Vector g;
  return value(a, g);
}

double BijectivityFunctional::value(const Vector& a, Vector& grad) const {
  const int n = space_.size();
  const int half = n / 2;
  const auto a1 = a.head(half), a2 = a.tail(half);
  const Vector g11 = dx_.leftCols(half) * a1, g12 = dt_.leftCols(half) * a1;
  const Vector g21 = dx_.rightCols(half) * a2, g22 = dt_.rightCols(half) * a2;
  const double eps = params_.eps, C = params_.c_exp;
  const Eigen::Index np = static_cast<Eigen::Index>(weights_.size());
  Vector w1(np), w2(np), w3(np), w4(np);
  double f = 0.0;
  for (Eigen::Index p = 0; p < np; ++p) {
    const double gdet = (1.0 + g11(p)) * (1.0 + g22(p)) - g12(p) * g21(p);
    const double s1 = (eps - gdet) / C, s2 = (gdet - 1.0 / eps) / C;
    const double e1 = clamped_exp(s1), e2 = clamped_exp(s2);
    f += weights_[p] * (e1 + e2);
    // d f / d gdet, with zero slope beyond the clamp.
    const double df = weights_[p] * ((s1 < kExpClamp ? -e1 : 0.0) + (s2 < kExpClamp ? e2 : 0.0)) / C;
    w1(p) = df * (1.0 + g22(p));
    w2(p) = -df * g21(p);
    w3(p) = -df * g12(p);
    w4(p) = df * (1.0 + g11(p));
  }
  grad.resize(n);
  grad.head(half) = dx_.leftCols(half).transpose() * w1 + dt_.leftCols(half).transpose() * w2;
  grad.tail(half) = dx_.rightCols(half).transpose() * w3 + dt_.rightCols(half).transpose() * w4;
  return f;
}

double BijectivityFunctional::min_jacobian(const Vector& a) const {
  const int half = space_.size() / 2;
  const Vector g11 = dx_.leftCols(half) * a.head(half), g12 = dt_.leftCols(half) * a.head(half);
  const Vector g21 = dx_.rightCols(half) * a.tail(half), g22 = dt_.rightCols(half) * a.tail(half);
  const Vector det = ((1.0 + g11.array()) * (1.0 + g22.array()) - g12.array() * g21.array()).matrix();
  return det.minCoeff();
}

double bijectivity_functional(const MapSpace& space, const Vector& a, const BijectivityParams& params,
                              int order) {
  return BijectivityFunctional(space, params, 12, order).value(a);
}

Matrix h2_penalty_matrix(const MapSpace& space) {
  const int n = space.size();
  const auto gl = gauss_legendre(space.mbar() + 2);
  const double L = space.length(), T = space.final_time();
  Matrix A = Matrix::Zero(n, n);
  std::vector<double> v(n), dx(n), dt(n), dxx(n), dxt(n), dtt(n);
  for (std::size_t j = 0; j < gl.size(); ++j) {
    for (std::size_t i = 0; i < gl.size(); ++i) {
      const Vec2 X(gl.points[i].x() * L, gl.points[j].x() * T);
      const double w = gl.weights[i] * gl.weights[j] * L * T;
      space.modes_at(X, v.data(), dx.data(), dt.data(), dxx.data(), dxt.data(), dtt.data());
      const Eigen::Map<const Vector> Hxx(dxx.data(), n), Hxt(dxt.data(), n), Htt(dtt.data(), n);
      A.noalias() += w * (Hxx * Hxx.transpose() + 2.0 * Hxt * Hxt.transpose() + Htt * Htt.transpose());
    }
  }
  // Modes of different components never interact.
  const int half = n / 2;
  A.topRightCorner(half, half).setZero();
  A.bottomLeftCorner(half, half).setZero();
  return 0.5 * (A + A.transpose());
}

double star_inner_product(const Vector& a1, const Vector& a2) {
  if (a1.size() != a2.size()) throw InvalidArgument("star product of displacements from different spaces");
  return a1.dot(a2);
}

DeformedMesh deform_mesh(std::shared_ptr<const SpaceTimeMesh> mesh, const MapSpace& space, const Vector& a) {
  DeformedMesh out;
  out.nodes = mesh->nodes();
  for (auto& X : out.nodes) X = space.apply(a, X);
  out.base = std::move(mesh);
  return out;
}

double min_jacobian_on_grid(const MapSpace& space, const Vector& a, int n) {
  double g = 1e300;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Vec2 X(space.length() * i / (n - 1.0), space.final_time() * j / (n - 1.0));
      g = std::min(g, map_jacobian(space, a, X).second);
    }
  return g;
}

}  // namespace strobe
