#include "strobe/space_only.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace strobe {

namespace {

// Legendre polynomials P_0..P_{m-1} and derivatives at s in [-1, 1].
void legendre(int m, double s, Vector& P, Vector& dP) {
  P.resize(m);
  dP.resize(m);
  P(0) = 1.0;
  dP(0) = 0.0;
  if (m > 1) {
    P(1) = s;
    dP(1) = 1.0;
  }
  for (int k = 2; k < m; ++k) {
    P(k) = ((2.0 * k - 1.0) * s * P(k - 1) - (k - 1.0) * P(k - 2)) / k;
    dP(k) = dP(k - 2) + (2.0 * k - 1.0) * P(k - 1);
  }
}

struct Slice {
  std::vector<double> x;  // uniform grid
  Vector w;               // trapezoid weights
  double h = 0.0;
};

// Linear interpolation of grid values and their slope.
double interp(const Slice& g, const Vector& v, double x, double* slope) {
  const int m = static_cast<int>(g.x.size());
  double s = x / g.h;
  int i = static_cast<int>(std::floor(s));
  i = std::clamp(i, 0, m - 2);
  s = std::clamp(s - i, 0.0, 1.0);
  if (slope) *slope = (v(i + 1) - v(i)) / g.h;
  return (1.0 - s) * v(i) + s * v(i + 1);
}

}  // namespace

SliceBaseline space_only_baseline(const SpaceTimeMesh& mesh, int D, int component, const Matrix& U, double t,
                                  int template_index, const SliceRegistrationOptions& opts) {
  const int n = static_cast<int>(U.cols());
  if (n < 2) throw InvalidArgument("space-only baseline needs two snapshots");
  if (template_index < 0 || template_index >= n) throw InvalidArgument("template index out of range");
  const double L = mesh.length();
  const int m = opts.points > 0 ? opts.points : 4 * mesh.nx() * mesh.order() + 1;
  Slice g;
  g.h = L / (m - 1);
  g.w = Vector::Constant(m, g.h);
  g.w(0) = g.w(m - 1) = 0.5 * g.h;
  for (int i = 0; i < m; ++i) g.x.push_back(i * g.h);

  // raw slices, one per column, for every component and for the sensor
  auto mesh_ptr = std::shared_ptr<const SpaceTimeMesh>(&mesh, [](const SpaceTimeMesh*) {});
  std::vector<Matrix> raw(D, Matrix(m, n));
  for (int k = 0; k < n; ++k) {
    DGField F{mesh_ptr, D, U.col(k)};
    for (int d = 0; d < D; ++d)
      for (int i = 0; i < m; ++i) raw[d](i, k) = F.value_at(d, Vec2(g.x[i], t));
  }
  const Matrix& S = raw[component];

  // map basis at the grid
  const int M = opts.mbar;
  Matrix B(m, M), dB(m, M), ddB(m, M);
  Vector P, dP;
  for (int i = 0; i < m; ++i) {
    const double x = g.x[i], s = 2.0 * x / L - 1.0;
    legendre(M + 1, s, P, dP);
    const double b = x * (L - x) / (L * L), db = (L - 2.0 * x) / (L * L), ddb = -2.0 / (L * L);
    for (int j = 0; j < M; ++j) {
      // second derivative of P_j by finite recursion is avoided: use the ODE
      const double Pj = P(j), dPj = dP(j) * 2.0 / L;
      const double ddPj = (std::abs(1.0 - s * s) > 1e-12)
                              ? (2.0 * s * dP(j) - j * (j + 1.0) * P(j)) / (1.0 - s * s) * 4.0 / (L * L)
                              : 0.0;
      B(i, j) = b * Pj;
      dB(i, j) = db * Pj + b * dPj;
      ddB(i, j) = ddb * Pj + 2.0 * db * dPj + b * ddPj;
    }
  }
  const Matrix A2 = ddB.transpose() * g.w.asDiagonal() * ddB;

  // templates
  Matrix T(m, 0);
  auto add_template = [&](const Vector& v) {
    Vector r = v;
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < T.cols(); ++j) r -= T.col(j).dot(g.w.cwiseProduct(r)) * T.col(j);
    const double nr = std::sqrt(r.dot(g.w.cwiseProduct(r)));
    if (!(nr > 1e-10 * std::sqrt(v.dot(g.w.cwiseProduct(v))))) return false;
    T.conservativeResize(m, T.cols() + 1);
    T.col(T.cols() - 1) = r / nr;
    return true;
  };
  add_template(S.col(template_index));

  auto compose = [&](const Vector& s, const Vector& a, Vector* slope) {
    const Vector phi = B * a;
    Vector v(m);
    if (slope) slope->resize(m);
    for (int i = 0; i < m; ++i) {
      double sl = 0.0;
      v(i) = interp(g, s, std::clamp(g.x[i] + phi(i), 0.0, L), &sl);
      if (slope) (*slope)(i) = sl;
    }
    return v;
  };

  Matrix W = Matrix::Identity(M, M);
  std::vector<Vector> a(n, Vector::Zero(M));
  for (int N = 1; N <= opts.n_max; ++N) {
    double worst = -1.0;
    int kw = 0;
    for (int k = 0; k < n; ++k) {
      const Vector s = S.col(k);
      const Matrix BW = B * W, dBW = dB * W;
      const Matrix WAW = W.transpose() * A2 * W;
      const Objective f = [&](const Vector& c, Vector* grad) {
        const Vector dphi = dBW * c;
        if (dphi.minCoeff() + 1.0 < opts.eps) return std::numeric_limits<double>::infinity();
        Vector slope;
        const Vector v = compose(s, W * c, &slope);
        const Vector r = v - T * (T.transpose() * g.w.asDiagonal() * v);
        const Vector wr = g.w.cwiseProduct(r);
        const Vector Ac = WAW * c;
        if (grad) *grad = 2.0 * BW.transpose() * wr.cwiseProduct(slope) + 2.0 * opts.xi * Ac;
        return r.dot(wr) + opts.xi * c.dot(Ac);
      };
      Vector c0 = W.transpose() * a[k];
      if (!std::isfinite(f(c0, nullptr))) c0.setZero();
      const BfgsResult res = bfgs_minimize(f, c0, opts.bfgs);
      a[k] = W * res.x;
      const Vector v = compose(s, a[k], nullptr);
      const double rel = res.f / std::max(1e-300, v.dot(g.w.cwiseProduct(v)));
      if (rel > worst) {
        worst = rel;
        kw = k;
      }
    }
    Matrix Acoef(M, n);
    for (int k = 0; k < n; ++k) Acoef.col(k) = a[k];
    if (Acoef.norm() > 0.0) {
      const PODResult p = pod(Acoef, opts.tol_pod);
      W = p.modes;
    }
    if (N == opts.n_max) break;
    if (!add_template(compose(S.col(kw), a[kw], nullptr))) break;
  }

  // L2 POD of the mapped and raw slices (all components)
  auto gram_eigs = [&](bool mapped) {
    Matrix C = Matrix::Zero(n, n);
    for (int d = 0; d < D; ++d) {
      Matrix V(m, n);
      for (int k = 0; k < n; ++k) V.col(k) = mapped ? compose(raw[d].col(k), a[k], nullptr) : Vector(raw[d].col(k));
      C += V.transpose() * g.w.asDiagonal() * V;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(C);
    Vector ev = es.eigenvalues().reverse().cwiseMax(0.0);
    return Vector(ev / ev(0));
  };
  SliceBaseline out;
  out.t = t;
  out.registered = gram_eigs(true);
  out.unregistered = gram_eigs(false);
  out.M = static_cast<int>(W.cols());
  return out;
}

}  // namespace strobe
