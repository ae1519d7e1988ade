#include "strobe/optimizer.hpp"

#include <cmath>
#include <limits>

namespace strobe {

BfgsResult bfgs_minimize(const Objective& f, Vector x0, const BfgsOptions& opts) {
  const Eigen::Index n = x0.size();
  BfgsResult res;
  res.x = std::move(x0);
  Vector g(n);
  res.f = f(res.x, &g);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) throw InvalidArgument("bfgs: objective is not finite at the starting point");
  if (n == 0) {
    res.converged = true;
    return res;
  }
  Matrix H = Matrix::Identity(n, n);
  bool scaled = false;
  Vector gt(n);
  for (int it = 0; it < opts.max_iter; ++it) {
    res.iterations = it;
    res.grad_norm = g.lpNorm<Eigen::Infinity>();
    if (res.grad_norm <= opts.grad_tol * std::max(1.0, std::abs(res.f))) {
      res.converged = true;
      return res;
    }
    Vector p = -H * g;
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      // lost descent: restart from steepest descent
      H.setIdentity();
      scaled = false;
      p = -g;
      slope = -g.squaredNorm();
    }
    double s = 1.0;
    if (!scaled) s = std::min(1.0, 1.0 / std::max(p.lpNorm<Eigen::Infinity>(), 1e-300));
    bool ok = false;
    double ft = 0.0;
    Vector xt;
    for (int b = 0; b < opts.max_backtracks; ++b, s *= 0.5) {
      xt = res.x + s * p;
      ft = f(xt, &gt);
      ++res.evaluations;
      if (std::isfinite(ft) && ft <= res.f + opts.armijo * s * slope) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      if (!scaled) break;
      H.setIdentity();
      scaled = false;
      continue;
    }
    const Vector sv = xt - res.x;
    const Vector yv = gt - g;
    const double sy = sv.dot(yv);
    const double drop = res.f - ft;
    res.x = xt;
    res.f = ft;
    g = gt;
    if (sy > 1e-12 * sv.norm() * yv.norm()) {
      if (!scaled) {
        H = Matrix::Identity(n, n) * (sy / yv.squaredNorm());
        scaled = true;
      }
      const double r = 1.0 / sy;
      const Vector Hy = H * yv;
      H += (r * r * yv.dot(Hy) + r) * sv * sv.transpose() - r * (Hy * sv.transpose() + sv * Hy.transpose());
    }
    if (drop <= opts.f_tol * std::max(1.0, std::abs(res.f))) {
      res.iterations = it + 1;
      res.grad_norm = g.lpNorm<Eigen::Infinity>();
      res.converged = true;
      return res;
    }
  }
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  res.converged = res.grad_norm <= opts.grad_tol * std::max(1.0, std::abs(res.f));
  return res;
}

}  // namespace strobe
