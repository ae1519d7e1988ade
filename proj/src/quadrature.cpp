#include "strobe/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace strobe {

void legendre(int n, double x, double& value, double& derivative) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    value = 1.0;
    derivative = 0.0;
    return;
  }
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  value = p1;
  // Derivative from the recurrence; endpoints handled separately.
  if (std::abs(x * x - 1.0) < 1e-14) {
    derivative = 0.5 * n * (n + 1) * std::pow(x, n + 1);
  } else {
    derivative = n * (x * p1 - p0) / (x * x - 1.0);
  }
}

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw InvalidArgument("gauss_legendre: n must be >= 1");
  QuadratureRule rule;
  rule.points.resize(n, Vec2::Zero());
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double value = 0.0;
    double derivative = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, value, derivative);
      const double dx = value / derivative;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(n, x, value, derivative);
    // Map from [-1,1] to [0,1], ascending order.
    rule.points[n - 1 - i] = Vec2(0.5 * (x + 1.0), 0.0);
    rule.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * derivative * derivative);
  }
  return rule;
}

namespace {

QuadratureRule radon7() {
  const double s15 = std::sqrt(15.0);
  const double a1 = (6.0 - s15) / 21.0;
  const double a2 = (6.0 + s15) / 21.0;
  const double w0 = 9.0 / 80.0;
  const double w1 = (155.0 - s15) / 2400.0;
  const double w2 = (155.0 + s15) / 2400.0;
  QuadratureRule rule;
  rule.points = {Vec2(1.0 / 3.0, 1.0 / 3.0),
                 Vec2(a1, a1), Vec2(1.0 - 2.0 * a1, a1), Vec2(a1, 1.0 - 2.0 * a1),
                 Vec2(a2, a2), Vec2(1.0 - 2.0 * a2, a2), Vec2(a2, 1.0 - 2.0 * a2)};
  rule.weights = {w0, w1, w1, w1, w2, w2, w2};
  return rule;
}

QuadratureRule collapsed(int degree) {
  // (u, v) in [0,1]^2 -> (x, y) = (u (1 - v), v), Jacobian (1 - v).
  const int n = (degree + 3) / 2;
  const QuadratureRule g = gauss_legendre(n);
  QuadratureRule rule;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double u = g.points[i].x();
      const double v = g.points[j].x();
      rule.points.emplace_back(u * (1.0 - v), v);
      rule.weights.push_back(g.weights[i] * g.weights[j] * (1.0 - v));
    }
  }
  return rule;
}

}  // namespace

QuadratureRule triangle_rule(int degree) {
  if (degree < 0) throw InvalidArgument("triangle_rule: negative degree");
  if (degree <= 5) return radon7();
  return collapsed(degree);
}

}  // namespace strobe
