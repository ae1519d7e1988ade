#pragma once

#include "strobe/common.hpp"
#include "strobe/quadrature.hpp"

#include <array>
#include <vector>

namespace strobe {

/// Nodal Lagrange element of total degree p on the reference triangle
/// (0,0), (1,0), (0,1). Nodes sit on the equispaced lattice (i/p, j/p).
class ReferenceTriangle {
 public:
  explicit ReferenceTriangle(int p);

  int order() const { return p_; }
  int num_nodes() const { return n_; }
  const std::vector<Vec2>& nodes() const { return nodes_; }

  /// Basis values at a reference point.
  Vector values(const Vec2& xi) const;
  /// Basis gradients at a reference point, one row per basis function.
  Eigen::MatrixX2d gradients(const Vec2& xi) const;

  const QuadratureRule& volume_rule() const { return volume_rule_; }
  /// Basis values at volume quadrature points (nq x n).
  const Matrix& volume_values() const { return vol_values_; }
  const Matrix& volume_dxi() const { return vol_dxi_; }
  const Matrix& volume_deta() const { return vol_deta_; }

  /// Gauss-Legendre rule on [0,1] used for every edge.
  const QuadratureRule& edge_rule() const { return edge_rule_; }
  /// Point on local edge e (0: v0->v1, 1: v1->v2, 2: v2->v0) at parameter s.
  static Vec2 edge_point(int edge, double s);
  /// Basis values and reference gradients at the edge-rule points of local edge e (nqe x n).
  const Matrix& edge_values(int e) const { return edge_values_[e]; }
  const Matrix& edge_dxi(int e) const { return edge_dxi_[e]; }
  const Matrix& edge_deta(int e) const { return edge_deta_[e]; }

  /// Reference mass matrix (integrated over the area-1/2 reference triangle).
  const Matrix& mass() const { return mass_; }
  /// Quadratic form u^T Q u = ||u - Pi_{p-1} u||^2 on the reference triangle.
  const Matrix& high_mode_form() const { return high_mode_form_; }

 private:
  int p_;
  int n_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 2>> exponents_;
  Matrix coeffs_;  // monomial coefficients of each Lagrange function (n x n)
  QuadratureRule volume_rule_;
  QuadratureRule edge_rule_;
  Matrix vol_values_, vol_dxi_, vol_deta_;
  std::array<Matrix, 3> edge_values_, edge_dxi_, edge_deta_;
  Matrix mass_;
  Matrix high_mode_form_;
};

}  // namespace strobe
