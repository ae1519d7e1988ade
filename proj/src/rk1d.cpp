#include "strobe/rk1d.hpp"

#include "strobe/dg.hpp"

#include <algorithm>
#include <cmath>

namespace strobe {

void SliceHistory::push(double t, Matrix mean, Matrix slope) {
  times_.push_back(t);
  mean_.push_back(std::move(mean));
  slope_.push_back(std::move(slope));
}

State SliceHistory::level_value(int s, double x) const {
  const double dx = L_ / cells_;
  const int i = std::clamp(static_cast<int>(std::floor(x / dx)), 0, cells_ - 1);
  const double xi = std::clamp(2.0 * (x - (i + 0.5) * dx) / dx, -1.0, 1.0);
  return mean_[s].col(i) + xi * slope_[s].col(i);
}

State SliceHistory::value(double x, double t) const {
  if (times_.empty()) throw InvalidArgument("empty slice history");
  if (t <= times_.front()) return level_value(0, x);
  if (t >= times_.back()) return level_value(steps() - 1, x);
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const int s = static_cast<int>(it - times_.begin());
  const double t0 = times_[s - 1], t1 = times_[s];
  const double th = (t - t0) / (t1 - t0);
  return (1.0 - th) * level_value(s - 1, x) + th * level_value(s, x);
}

namespace {

double minmod(double a, double b, double c) {
  if (a > 0.0 && b > 0.0 && c > 0.0) return std::min({a, b, c});
  if (a < 0.0 && b < 0.0 && c < 0.0) return std::max({a, b, c});
  return 0.0;
}

struct Marcher {
  const ConservationLaw& law;
  const Vector& mu;
  int n, D;
  double L, dx;
  std::vector<double> xq;  // cell-local Gauss abscissae in [-1, 1]

  State ghost(BoundarySide side, const State& trace, double t) const {
    const Vec2 x(side == BoundarySide::Left ? 0.0 : L, t);
    State g = trace;
    bool any = false;
    for (int d = 0; d < D; ++d) any = any || law.is_dirichlet(side, d);
    if (!any) return g;
    const State ub = law.dirichlet_value(side, x, mu);
    for (int d = 0; d < D; ++d)
      if (law.is_dirichlet(side, d)) g(d) = ub(d);
    return g;
  }

  void operator()(const Matrix& m, const Matrix& s, double t, Matrix& dm, Matrix& ds) const {
    const Vec2 nx(1.0, 0.0);
    std::vector<State> F(n + 1);
    for (int i = 0; i <= n; ++i) {
      const State left = i == 0 ? ghost(BoundarySide::Left, State(m.col(0) - s.col(0)), t) : State(m.col(i - 1) + s.col(i - 1));
      const State right = i == n ? ghost(BoundarySide::Right, State(m.col(n - 1) + s.col(n - 1)), t) : State(m.col(i) - s.col(i));
      F[i] = rusanov_flux(law, right, left, nx).head(D);
    }
    dm.resize(D, n);
    ds.resize(D, n);
    const double w = 1.0;  // two-point Gauss weights on [-1, 1]
    for (int i = 0; i < n; ++i) {
      State fint = State::Zero(D), s0 = State::Zero(D), s1 = State::Zero(D);
      for (double xi : xq) {
        const State U = m.col(i) + xi * s.col(i);
        fint += w * law.flux(U);
        if (law.has_source()) {
          const State S = law.source(U, (i + 0.5) * dx + 0.5 * dx * xi);
          s0 += w * S;
          s1 += w * xi * S;
        }
      }
      dm.col(i) = (-(F[i + 1] - F[i]) + 0.5 * dx * s0) / dx;
      ds.col(i) = 3.0 * (fint - (F[i + 1] + F[i]) + 0.5 * dx * s1) / dx;
    }
  }

  void limit(const Matrix& m, Matrix& s, double t) const {
    const State gl = ghost(BoundarySide::Left, State(m.col(0)), t);
    const State gr = ghost(BoundarySide::Right, State(m.col(n - 1)), t);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < D; ++d) {
        const double up = (i + 1 < n ? m(d, i + 1) : gr(d)) - m(d, i);
        const double dn = m(d, i) - (i > 0 ? m(d, i - 1) : gl(d));
        s(d, i) = minmod(s(d, i), up, dn);
      }
    if (law.name() == "shallow-water")
      for (int i = 0; i < n; ++i) {
        if (!(m(0, i) > 0.0)) throw DryState("1D march: nonpositive cell height");
        if (std::abs(s(0, i)) >= m(0, i)) s(0, i) = 0.0;
      }
  }
};

}  // namespace

SliceHistory march_1d(const ConservationLaw& law, const Vector& mu, int cells, double cfl) {
  if (cells < 2) throw InvalidArgument("1D march needs at least two cells");
  if (!(cfl > 0.0)) throw InvalidArgument("CFL number must be positive");
  const int D = law.dim();
  const double L = law.length(), T = law.final_time();
  Marcher op{law, mu, cells, D, L, L / cells, {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)}};
  const double dx = op.dx;

  Matrix m(D, cells), s(D, cells);
  for (int i = 0; i < cells; ++i) {
    State a = State::Zero(D), b = State::Zero(D);
    for (double xi : op.xq) {
      const State u = law.dirichlet_value(BoundarySide::Bottom, Vec2((i + 0.5) * dx + 0.5 * dx * xi, 0.0), mu);
      a += 0.5 * u;
      b += 1.5 * xi * u;
    }
    m.col(i) = a;
    s.col(i) = b;
  }
  op.limit(m, s, 0.0);

  SliceHistory hist(L, cells, D);
  hist.push(0.0, m, s);
  double t = 0.0;
  Matrix dm, ds, m1, s1;
  while (t < T * (1.0 - 1e-14)) {
    double smax = 1e-12;
    for (int i = 0; i < cells; ++i) smax = std::max(smax, law.max_speed(State(m.col(i)), Vec2(1.0, 0.0)));
    double dt = cfl * dx / smax;
    if (t + dt > T) dt = T - t;
    op(m, s, t, dm, ds);
    m1 = m + dt * dm;
    s1 = s + dt * ds;
    op.limit(m1, s1, t + dt);
    op(m1, s1, t + dt, dm, ds);
    m = 0.5 * (m + m1 + dt * dm);
    s = 0.5 * (s + s1 + dt * ds);
    op.limit(m, s, t + dt);
    if (!m.allFinite()) throw DryState("1D march produced non-finite values");
    t += dt;
    hist.push(t, m, s);
  }
  return hist;
}

Vector initial_guess(const ConservationLaw& law, const SpaceTimeMesh& mesh, const Vector& mu,
                     const MarchOptions& opts) {
  const int cells = opts.cells > 0 ? opts.cells : 4 * mesh.nx();
  const SliceHistory hist = march_1d(law, mu, cells, opts.cfl);
  return interpolate(mesh, law.dim(), [&](const Vec2& x) { return hist.value(x.x(), x.y()); });
}

}  // namespace strobe
