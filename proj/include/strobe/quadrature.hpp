#pragma once

#include "strobe/common.hpp"

#include <vector>

namespace strobe {

/// Points and weights of a quadrature rule. For 1D rules only x() is used.
struct QuadratureRule {
  std::vector<Vec2> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// Gauss-Legendre rule with n points on [0, 1] (points stored in .x()).
QuadratureRule gauss_legendre(int n);

/// Rule on the reference triangle (0,0),(1,0),(0,1), exact for total degree <= degree.
/// Degree <= 5 uses the symmetric 7-point Radon rule; higher degrees use a
/// collapsed Gauss tensor rule.
QuadratureRule triangle_rule(int degree);

/// Legendre polynomial P_n(x) on [-1, 1] and its derivative.
void legendre(int n, double x, double& value, double& derivative);

}  // namespace strobe
