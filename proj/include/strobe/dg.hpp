#pragma once

#include "strobe/mesh.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <memory>
#include <vector>

namespace strobe {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

/// Nodal coefficient vector of a D-component DG field, j = i + k n_lp + d n_lp N_e.
struct DGField {
  std::shared_ptr<const SpaceTimeMesh> mesh;
  int D = 1;
  Vector coeffs;

  static DGField zeros(std::shared_ptr<const SpaceTimeMesh> mesh, int D);
  Eigen::Index size() const { return coeffs.size(); }
  /// Value of component d at reference point xi of element k.
  double value(int d, int k, const Vec2& xi) const;
  /// Value of component d at a physical point (located in the undeformed mesh).
  double value_at(int d, const Vec2& x) const;
};

inline Eigen::Index dof_index(const SpaceTimeMesh& mesh, int i, int k, int d) {
  const Eigen::Index nlp = mesh.nodes_per_element();
  return i + k * nlp + d * nlp * mesh.num_elements();
}

inline Eigen::Index hf_size(const SpaceTimeMesh& mesh, int D) {
  return static_cast<Eigen::Index>(mesh.num_nodes()) * D;
}

/// Geometric building blocks of the BR2 diffusion form, scaled later by the
/// per-element viscosity. All blocks are scalar (one solution component).
class DiffusionOperator {
 public:
  static constexpr double kPenalty = 3.0;

  explicit DiffusionOperator(const SpaceTimeMesh& mesh);

  const SpaceTimeMesh& mesh() const { return mesh_; }
  /// Element stiffness matrix, integral of grad phi_j . grad phi_i.
  const Matrix& stiffness(int k) const { return stiffness_[k]; }
  /// Element mass matrix.
  const Matrix& mass(int k) const { return mass_[k]; }
  const Matrix& inverse_mass(int k) const { return inverse_mass_[k]; }

  /// Interior facet form T_F = eps_a * P_a + eps_b * P_b acting on (u_a, u_b).
  const Matrix& interior_part(int facet, int side) const { return interior_[facet][side]; }
  /// Dirichlet facet form: B u + C g where g holds boundary data at edge points.
  const Matrix& boundary_matrix(int facet) const { return boundary_matrix_[facet]; }
  const Matrix& boundary_data(int facet) const { return boundary_data_[facet]; }

 private:
  const SpaceTimeMesh& mesh_;
  std::vector<Matrix> stiffness_, mass_, inverse_mass_;
  std::vector<std::array<Matrix, 2>> interior_;
  std::vector<Matrix> boundary_matrix_, boundary_data_;
};

struct NormPair {
  SparseMatrix X;
  SparseMatrix Y;
};

/// Discrete L2 (X) and broken H1 with BR2 jump terms (Y) for a D-component space.
NormPair assemble_norms(const SpaceTimeMesh& mesh, int D = 1);

/// Cholesky factorization of an SPD matrix, used for Riesz representers.
class RieszSolver {
 public:
  explicit RieszSolver(const SparseMatrix& Y);
  Vector solve(const Vector& F) const;
  Matrix solve(const Matrix& F) const;
  /// L^{-1} P F for Y = P^T L L^T P, so that ||whiten(F)||_2 = ||F||_{Y^{-1}}.
  Matrix whiten(const Matrix& F) const;
  const SparseMatrix& matrix() const { return Y_; }

 private:
  SparseMatrix Y_;
  Eigen::SimplicialLLT<SparseMatrix> llt_;
};

struct PODResult {
  Matrix modes;         // columns orthonormal in the chosen inner product
  Vector eigenvalues;   // all Gramian eigenvalues, nonincreasing
  Matrix coefficients;  // N x n_snapshots projection coefficients
  int N = 0;
};

/// Smallest N with sum_{n<=N} lambda_n >= (1 - tol) sum lambda.
int pod_cardinality(const Vector& eigenvalues, double tol);

/// Method of snapshots. inner == nullptr means the Euclidean product.
/// max_modes > 0 overrides the cardinality rule.
PODResult pod(const Matrix& snapshots, double tol, const SparseMatrix* inner = nullptr, int max_modes = 0);

/// ||U - Pi_Z U|| / ||U|| in the X inner product (Z X-orthonormal, possibly empty).
double best_fit_error(const Vector& U, const Matrix& Z, const SparseMatrix& X);

/// Replaces node values that share a lattice position by their mean.
Vector to_continuous(const SpaceTimeMesh& mesh, int D, const Vector& coeffs);

/// Per-element L2 projection from values at the volume quadrature points
/// (nq x N_e, column k for element k) onto the nodal basis.
Vector project_quadrature_values(const SpaceTimeMesh& mesh, const Matrix& values);

/// Values of a scalar component at the volume quadrature points (nq x N_e).
Matrix quadrature_values(const SpaceTimeMesh& mesh, const Vector& coeffs, int d = 0);

/// Interpolates a pointwise function at the DG nodes.
Vector interpolate(const SpaceTimeMesh& mesh, int D, const std::function<State(const Vec2&)>& f);

}  // namespace strobe
