#pragma once

#include "strobe/assembler.hpp"
#include "strobe/nnls.hpp"
#include "strobe/regression.hpp"

#include <memory>
#include <string>
#include <vector>

namespace strobe {

/// Rows of a global matrix that belong to element e, in element-local order.
Matrix element_rows(const SpaceTimeMesh& mesh, int D, const Matrix& M, int e);

/// Accumulates the tested residual Y^T R and, optionally, Y^T J Z.
class TestedSink : public AssemblySink {
 public:
  TestedSink(const SpaceTimeMesh& mesh, int D, const Matrix& Y, const Matrix* Z);
  void add_residual(int e, const Vector& r) override;
  void add_jacobian(int row_e, int col_e, const Matrix& B) override;
  Vector r;
  Matrix J;

 private:
  const SpaceTimeMesh& mesh_;
  int D_;
  const Matrix& Y_;
  const Matrix* Z_;
};

/// Accumulates the full residual R and the projected Jacobian J Z.
class ProjectedSink : public AssemblySink {
 public:
  ProjectedSink(const SpaceTimeMesh& mesh, int D, const Matrix* Z);
  void add_residual(int e, const Vector& r) override;
  void add_jacobian(int row_e, int col_e, const Matrix& B) override;
  Vector R;
  Matrix JZ;

 private:
  const SpaceTimeMesh& mesh_;
  int D_;
  const Matrix* Z_;
};

/// Tested residual split by the element whose pass produced it: column k holds
/// Y^T r_k (J x N_e). Also accumulates Y^T J Z over all elements.
class ElementTestedSink : public AssemblySink {
 public:
  ElementTestedSink(const SpaceTimeMesh& mesh, int D, const Matrix& Y, const Matrix& Z);
  void begin_element(int k) override { current_ = k; }
  void add_residual(int e, const Vector& r) override;
  void add_jacobian(int row_e, int col_e, const Matrix& B) override;
  Matrix columns;
  Matrix J;

 private:
  const SpaceTimeMesh& mesh_;
  int D_;
  const Matrix& Y_;
  const Matrix& Z_;
  int current_ = -1;
};

struct GaussNewtonOptions {
  int max_iter = 30;
  double grad_tol = 1e-9;   // on ||J^T r||_2
  double step_tol = 1e-12;  // relative step size treated as stagnation
  double armijo = 1e-4;
  int max_backtracks = 30;
  bool viscosity_derivative = true;  // differentiate the shock-capturing viscosity
};

struct RomReport {
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
  double gradient_norm = 0.0;
  double seconds = 0.0;
  std::string status;
};

/// r(alpha) and, when Jr is non-null, its Jacobian.
using ReducedResidual = std::function<void(const Vector& alpha, Vector& r, Matrix* Jr)>;

/// Damped Gauss-Newton on 1/2 ||r||^2 (square = true: damped Newton on r = 0).
/// Returns the last accepted iterate; failures are reported, not thrown.
Vector gauss_newton(const ReducedResidual& f, Vector alpha, const GaussNewtonOptions& opts, RomReport* report,
                    bool square = false);

/// Element subset and weights of a quadrature rule; all elements with unit
/// weights when empty.
struct ElementQuadrature {
  std::vector<int> elements;
  Vector weights;  // indexed by element id
  bool full() const { return elements.empty(); }
};

/// Galerkin ROM, Z^T R(Z alpha) = 0.
Vector galerkin_solve(const Assembler& as, const Matrix& Z, const MapGeometry& geo, Vector alpha0,
                      const GaussNewtonOptions& opts = {}, RomReport* report = nullptr);

/// Minimum residual ROM, min ||R(Z alpha)||_{Y^{-1}}.
Vector minres_solve(const Assembler& as, const Matrix& Z, const RieszSolver& Y, const MapGeometry& geo,
                    Vector alpha0, const GaussNewtonOptions& opts = {}, RomReport* report = nullptr);

/// Approximate minimum residual ROM, min ||Y_J^T R(Z alpha)||_2 with an
/// optional (hyper-reduced) element quadrature. geo must cover its elements.
Vector amr_solve(const Assembler& as, const Matrix& Z, const Matrix& YJ, const MapGeometry& geo, Vector alpha0,
                 const ElementQuadrature& quad = {}, const GaussNewtonOptions& opts = {},
                 RomReport* report = nullptr);

/// Training data shared by the offline builders: mapped snapshots and the
/// reduced maps (Phi^k = id + W coefficients.col(k)).
struct TrainingSet {
  ModelPtr law;
  std::shared_ptr<const SpaceTimeMesh> mesh;
  std::shared_ptr<const MapSpace> space;
  std::vector<Vector> mus;
  Matrix mapped;        // N_hf x n
  Matrix W;             // M_hf x M
  Matrix coefficients;  // M x n
};

struct TestSpaceResult {
  Matrix YJ;  // Y-orthonormal columns
  Vector eigenvalues;
  Matrix eta;  // all Riesz representers, one per column
};

/// Empirical test space: Riesz representers of J(U~^k; Phi^k) zeta_n,
/// compressed by POD in the Y product to J modes (J <= 0: POD tolerance).
TestSpaceResult build_test_space(const TrainingSet& ts, const Matrix& Z, const RieszSolver& Y, int J,
                                 double tol_pod = 1e-4, bool continuous = false,
                                 const GaussNewtonOptions& opts = {});

struct EqpResult {
  Vector rho;                // per element
  std::vector<int> sampled;  // elements with rho > 0
  Matrix G;
  Vector b;
  NnlsResult nnls;
  double constraint_residual = 0.0;  // ||G rho - b||_2
};

/// Empirical quadrature weights: row 0 reproduces the element areas, then one
/// block of N rows per training point, each block scaled by its rhs norm.
EqpResult build_eqp(const TrainingSet& ts, const Matrix& Z, const Matrix& YJ, const SparseMatrix& X,
                    const NnlsOptions& nnls_opts, const GaussNewtonOptions& opts = {});

/// Assembles the EQP constraint system without solving it.
void eqp_system(const TrainingSet& ts, const Matrix& Z, const Matrix& YJ, const SparseMatrix& X, Matrix& G, Vector& b,
                const GaussNewtonOptions& opts = {});

/// Everything the online stage needs.
struct ReducedModel {
  std::string model;
  std::shared_ptr<const SpaceTimeMesh> mesh;
  std::shared_ptr<const MapSpace> space;
  Matrix W;   // M_hf x M
  Matrix Z;   // N_hf x N
  Matrix YJ;  // N_hf x J
  Vector rho;
  std::vector<int> sampled;
  RbfRegressor map_regressor;    // targets: map coefficients (M)
  RbfRegressor alpha_regressor;  // targets: solution coefficients (N)
  std::vector<Vector> train_mus;
  Matrix train_coefficients;  // M x n, fallback maps
  bool continuous = false;
};

struct OnlineResult {
  Vector alpha, alpha0, a;
  RomReport report;
  bool map_fallback = false;
  double seconds = 0.0;
};

/// Online solver over a fixed element quadrature: hyper-reduced when
/// hyper = true, the hf quadrature otherwise.
class OnlineSolver {
 public:
  OnlineSolver(const ReducedModel& rom, ModelPtr law, bool hyper, GaussNewtonOptions opts = {});
  OnlineResult solve(const Vector& mu) const;
  /// Same, with the map coefficients given.
  OnlineResult solve(const Vector& mu, const Vector& a) const;
  const std::vector<int>& elements() const { return elements_; }

 private:
  const ReducedModel& rom_;
  Assembler as_;
  bool hyper_;
  GaussNewtonOptions opts_;
  std::vector<int> elements_;
  ElementQuadrature quad_;
  std::unique_ptr<GeometryBasis> geo_;
};

// ---------------------------------------------------------------- bounds

struct AmrBoundReport {
  double beta = 0.0, gamma = 0.0;  // inf-sup and continuity constants of A
  double beta_NJ = 0.0;            // discrete inf-sup constant on (Z, Y_J)
  double delta_test = 0.0;         // how well Y_J contains the optimal test space
  double error = 0.0;              // ||u_hat - u*||_X
  double best_error = 0.0;         // inf over Z of ||u - u*||_X
  double bound = 0.0;              // gamma / (delta beta) best_error
  bool error_bound_holds = false;
  bool stability_bound_holds = false;
  Vector u_hat, u_star;
};

/// Checks the quasi-optimality and stability bounds of the approximate
/// minimum residual method on a linear problem v^T A u = v^T F with norm
/// matrices X (trial) and Y (test). Y_J must be Y-orthonormal.
AmrBoundReport verify_amr_bounds(const Matrix& A, const Vector& F, const Matrix& X, const Matrix& Y, const Matrix& Z,
                                 const Matrix& YJ);

struct BrrBoundReport {
  double stationarity = 0.0;  // ||J_hf^T R_hf|| at the EQ optimum
  double term1 = 0.0;         // ||J_hf - J_eq||_2 ||R_eq||_2
  double term2 = 0.0;         // ||J_hf^T (R_hf - R_eq)||_2
  double eq_gradient = 0.0;   // ||J_eq^T R_eq|| at the EQ optimum
  bool holds = false;
  Vector alpha;
};

/// Element-wise residual model r(alpha) = sum_k rho_k r_k(alpha) with dense
/// element residuals and Jacobians.
struct ElementResidualModel {
  std::function<Vector(int k, const Vector& alpha)> r;
  std::function<Matrix(int k, const Vector& alpha)> jac;
  int elements = 0;
};

/// Minimizes the EQ residual and evaluates the split bound on the exact
/// stationarity defect.
BrrBoundReport verify_brr_residual_bound(const ElementResidualModel& m, const Vector& rho, Vector alpha0);

}  // namespace strobe
