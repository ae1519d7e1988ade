#pragma once

#include "strobe/dg.hpp"
#include "strobe/geometry_maps.hpp"
#include "strobe/optimizer.hpp"

#include <memory>
#include <string>
#include <vector>

namespace strobe {

/// Volume quadrature points of every element, point (k, q) at k * nq + q.
struct QuadraturePoints {
  std::vector<Vec2> X;
  Vector w;  // weight times the element Jacobian
  int nq = 0;
  int size() const { return static_cast<int>(X.size()); }
};

QuadraturePoints volume_points(const SpaceTimeMesh& mesh);

/// A scalar DG field evaluated (with gradient) at arbitrary physical points.
class ScalarField {
 public:
  ScalarField(std::shared_ptr<const SpaceTimeMesh> mesh, const Vector& coeffs);
  /// Value at x; gradient written when grad is non-null. x is clamped into the
  /// rectangle first.
  double eval(Vec2 x, Vec2* grad = nullptr) const;
  const SpaceTimeMesh& mesh() const { return *mesh_; }
  const Vector& coeffs() const { return coeffs_; }

 private:
  std::shared_ptr<const SpaceTimeMesh> mesh_;
  Vector coeffs_;
};

/// Moving average along x of the nodal values on every time level of the node
/// lattice, with the window shrunk symmetrically near the ends. Returns a
/// continuous scalar field.
Vector filter_sensor(const SpaceTimeMesh& mesh, const Vector& field, int window);

/// Registration sensor of a state: the sensor component, optionally filtered.
Vector sensor_of(const SpaceTimeMesh& mesh, int D, int component, const Vector& state, int window);

/// Template space stored by its values at the volume quadrature points,
/// orthonormal in the discrete L2 product.
class TemplateSpace {
 public:
  TemplateSpace() = default;
  explicit TemplateSpace(const QuadraturePoints& pts) : w_(pts.w) {}
  int size() const { return static_cast<int>(basis_.cols()); }
  const Matrix& basis() const { return basis_; }
  const Vector& weights() const { return w_; }
  /// Adds a direction after orthogonalization; false if it is already contained.
  bool add(const Vector& values);
  /// L2 projection of point values onto the space.
  Vector project(const Vector& values) const;
  /// Gram matrix of the stored basis.
  Matrix gram() const;
  /// Restores a stored space as is.
  static TemplateSpace from_basis(Vector weights, Matrix basis) {
    TemplateSpace t;
    t.w_ = std::move(weights);
    t.basis_ = std::move(basis);
    return t;
  }

 private:
  Vector w_;
  Matrix basis_;
};

struct RegistrationParams {
  BijectivityParams bijectivity;
  double xi = 1e-4;
  BfgsOptions bfgs;
};

struct RegistrationResult {
  Vector a;       // full coefficient vector of phi*
  Vector c;       // coefficients with respect to the search basis
  Vector psi;     // optimal template, values at the quadrature points
  double f_star = 0.0;      // proximity at the optimum
  double f_relative = 0.0;  // f_star / ||s||^2
  double functional = 0.0;  // bijectivity surrogate at the optimum
  bool converged = false;
  int iterations = 0;
  int clamped = 0;  // quadrature points mapped outside the rectangle
};

/// Precomputed data for registering scalar sensor fields on a mesh.
class Registrar {
 public:
  Registrar(std::shared_ptr<const SpaceTimeMesh> mesh, const MapSpace& space, RegistrationParams params,
            int bij_cells = 12);
  Registrar(const Registrar&) = delete;
  Registrar& operator=(const Registrar&) = delete;

  const QuadraturePoints& points() const { return pts_; }
  const MapSpace& space() const { return space_; }
  const Matrix& h2() const { return A_reg_; }
  const BijectivityFunctional& bijectivity() const { return bij_; }
  const RegistrationParams& params() const { return params_; }
  const SpaceTimeMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const SpaceTimeMesh> mesh_ptr() const { return mesh_; }

  /// Mapped points X + phi(X) for full coefficients a.
  std::vector<Vec2> mapped_points(const Vector& a) const;
  /// s o Phi at the quadrature points (and d s/dx, d s/dt at the mapped points).
  Vector compose(const ScalarField& s, const Vector& a, Matrix* grad = nullptr, int* clamped = nullptr) const;

  /// Proximity int (s o Phi - psi)^2 with psi given by its point values.
  double proximity(const ScalarField& s, const Vector& a, const Vector& psi) const;

  /// Local minimizer of proximity + xi |phi|_H2^2 + bijectivity penalty over
  /// phi = W c, starting from c0. W has full-space coefficients in its columns.
  RegistrationResult register_one(const ScalarField& s, const TemplateSpace& T, const Matrix& W,
                                  const Vector& c0) const;

 private:
  std::shared_ptr<const SpaceTimeMesh> mesh_;
  MapSpace space_;
  RegistrationParams params_;
  QuadraturePoints pts_;
  Matrix B1_, B2_;  // mode values at the points (npts x Mbar^2), per component
  Matrix A_reg_;
  BijectivityFunctional bij_;
};

struct GreedyOptions {
  double tol_pod = 1e-4;
  int n_max = 3;
  double tol = 1e-4;  // on max_k f*_k / ||s_k||^2
};

struct GreedyIteration {
  int N = 0;
  int M = 0;
  double max_f_relative = 0.0;
  int worst = -1;
  std::vector<double> f_relative;
  std::vector<int> iterations;
  int unconverged = 0;
  int inadmissible = 0;
};

struct GreedyResult {
  TemplateSpace templates;
  Matrix W;             // M_hf x M, Euclidean-orthonormal columns
  Matrix coefficients;  // M x n
  Vector eigenvalues;   // displacement POD eigenvalues of the last iteration
  std::vector<Vector> phi_star;  // unreduced optimal displacements of the last iteration
  std::vector<GreedyIteration> log;
};

/// Greedy template/displacement construction over a set of sensor fields.
GreedyResult greedy_registration(const Registrar& reg, const std::vector<ScalarField>& sensors,
                                 const std::vector<Vector>& initial_templates, const GreedyOptions& opts);

/// U o Phi for a D-component field, L2-projected onto the DG space of the mesh.
Vector mapped_snapshot(const Registrar& reg, const Vector& U, int D, const Vector& a);

struct RePODResult {
  PODResult pod;   // all modes (up to n), X-orthonormal
  int N = 0;       // cardinality from the tolerance
  Matrix mapped;   // mapped snapshots, one per column
  Matrix alpha;    // all-mode coefficients, modes x n
};

/// Maps every snapshot with its displacement and compresses them by L2 POD.
RePODResult repod(const Registrar& reg, const Matrix& U, int D, const Matrix& W, const Matrix& coefficients,
                  double tol_pod, const SparseMatrix& X, bool continuous = false);

/// Relative best-fit error of U by span(Z) composed with Phi^{-1}, computed in the
/// reference frame with the g-weighted product. Z has X-orthonormal columns.
double registered_best_fit_error(const Registrar& reg, const Vector& U, int D, const Matrix& Z, const Vector& a);

}  // namespace strobe
