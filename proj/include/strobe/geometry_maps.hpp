#pragma once

#include "strobe/common.hpp"
#include "strobe/mesh.hpp"

#include <memory>
#include <vector>

namespace strobe {

/// Normalized shifted Legendre polynomials l_0..l_{n-1} on (0,1) with first and
/// second derivatives.
void shifted_legendre(int n, double s, double* value, double* d1, double* d2);

/// Displacement space W_hf: tensorized Legendre modes with the boundary factors
/// X1 (L - X1) / L^2 (first component) and X2 (T - X2) / T^2 (second component).
/// Mode m < Mbar^2 is first-component, the rest second-component.
class MapSpace {
 public:
  MapSpace(int Mbar, double L, double T);

  int mbar() const { return mbar_; }
  int size() const { return 2 * mbar_ * mbar_; }
  double length() const { return L_; }
  double final_time() const { return T_; }
  /// Component (0 or 1) carried by mode m.
  int component(int m) const { return m < mbar_ * mbar_ ? 0 : 1; }

  /// Scalar value, gradient and Hessian entries (xx, xt, tt) of every mode at X.
  void modes_at(const Vec2& X, double* value, double* dx, double* dt,
                double* dxx = nullptr, double* dxt = nullptr, double* dtt = nullptr) const;

  /// Displacement phi(X) and its gradient (row = component) for coefficients a.
  void evaluate(const Vector& a, const Vec2& X, Vec2& phi, Mat2& grad) const;
  Vec2 apply(const Vector& a, const Vec2& X) const;

  /// Basis values at many points (npts x M_hf), one scalar per mode.
  Matrix values_at(const std::vector<Vec2>& points) const;
  void gradients_at(const std::vector<Vec2>& points, Matrix& dx, Matrix& dt) const;

 private:
  int mbar_;
  double L_, T_;
};

/// Jacobian G = I + grad phi and its determinant.
std::pair<Mat2, double> map_jacobian(const MapSpace& space, const Vector& a, const Vec2& X);

struct BijectivityParams {
  double eps = 0.1;
  double c_exp = 0.0025;
  double delta = 0.0;  // budget; <= 0 means |Omega|
};

/// Fixed tensor quadrature of the bijectivity surrogate on a dedicated grid,
/// with cached mode gradients so value and gradient are cheap to evaluate.
class BijectivityFunctional {
 public:
  BijectivityFunctional(const MapSpace& space, BijectivityParams params, int cells = 12, int order = 6);

  double value(const Vector& a) const;
  /// Value and gradient with respect to the coefficients.
  double value(const Vector& a, Vector& grad) const;
  double budget() const { return delta_; }
  bool admissible(const Vector& a) const { return value(a) <= delta_; }
  /// Smallest determinant over the quadrature points.
  double min_jacobian(const Vector& a) const;
  const BijectivityParams& params() const { return params_; }

 private:
  const MapSpace& space_;
  BijectivityParams params_;
  double delta_;
  std::vector<double> weights_;
  Matrix dx_, dt_;  // npts x M_hf
};

/// One-shot evaluation of the bijectivity surrogate.
double bijectivity_functional(const MapSpace& space, const Vector& a, const BijectivityParams& params,
                              int order = 6);

/// H2 seminorm Gram matrix, sum over components of int phi_xx^2 + 2 phi_xt^2 + phi_tt^2.
Matrix h2_penalty_matrix(const MapSpace& space);

/// Euclidean product of full coefficient vectors.
double star_inner_product(const Vector& a1, const Vector& a2);

/// Moves every DG node X to X + phi(X).
DeformedMesh deform_mesh(std::shared_ptr<const SpaceTimeMesh> mesh, const MapSpace& space, const Vector& a);

/// Smallest det(I + grad phi) on an n x n grid of the closed rectangle.
double min_jacobian_on_grid(const MapSpace& space, const Vector& a, int n = 101);

}  // namespace strobe
