#include "doctest.h"
#include "strobe/hf_solver.hpp"
#include "strobe/rom.hpp"

#include <cmath>
#include <random>

using namespace strobe;

namespace {

Matrix random_matrix(Eigen::Index m, Eigen::Index n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Matrix A(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = u(rng);
  return A;
}

Vector burgers_mu(double a, double b) {
  Vector mu(2);
  mu << a, b;
  return mu;
}

// X-orthonormal basis from columns
Matrix orthonormalize(const Matrix& V, const Matrix& X) {
  const Matrix G = V.transpose() * X * V;
  Eigen::LLT<Matrix> llt(G);
  return llt.matrixL().solve(V.transpose()).transpose();
}

std::shared_ptr<LinearAdvection> linear_problem() {
  auto adv = std::make_shared<LinearAdvection>(0.6, 1.0, 1.0, [](double x, double t) { return 1.0 + 0.5 * std::sin(3.0 * x - t); });
  adv->viscosity.eps_base = 1e-3;
  adv->viscosity.eps0 = 0.0;
  return adv;
}

}  // namespace

TEST_CASE("reduced sinks match dense products of the global residual") {
  auto law = make_model("burgers");
  auto mesh = build_structured_mesh(1.0, 0.8, 5, 4, 2);
  Assembler as(law, mesh);
  as.set_parameter(burgers_mu(1.1, 0.2));
  const Eigen::Index Nhf = as.size();
  Vector w = solve_hf(as);
  w += 0.01 * random_matrix(Nhf, 1, 3).col(0);
  const Matrix Z = random_matrix(Nhf, 3, 4), Y = random_matrix(Nhf, 5, 5);
  AssemblyOptions ao;
  ao.viscosity_derivative = true;
  Vector R;
  SparseMatrix J;
  as.residual_and_jacobian(w, R, J, ao);

  TestedSink ts(*mesh, 1, Y, &Z);
  as.assemble(w, ts, ao);
  CHECK((ts.r - Y.transpose() * R).norm() <= 1e-12 * (Y.transpose() * R).norm());
  const Matrix JZ = J * Z;
  CHECK((ts.J - Y.transpose() * JZ).norm() <= 1e-12 * (Y.transpose() * JZ).norm());

  ProjectedSink ps(*mesh, 1, &Z);
  as.assemble(w, ps, ao);
  CHECK((ps.R - R).norm() <= 1e-13 * R.norm());
  CHECK((ps.JZ - JZ).norm() <= 1e-12 * JZ.norm());

  ElementTestedSink es(*mesh, 1, Y, Z);
  as.assemble(w, es, ao);
  CHECK((es.columns.rowwise().sum() - Y.transpose() * R).norm() <= 1e-12 * R.norm() * Y.norm());
  CHECK((es.J - ts.J).norm() <= 1e-12 * ts.J.norm());

  // unit weights change nothing
  const Vector ones = Vector::Ones(mesh->num_elements());
  std::vector<int> all(mesh->num_elements());
  for (int k = 0; k < mesh->num_elements(); ++k) all[k] = k;
  AssemblyOptions wo = ao;
  wo.weights = &ones;
  wo.elements = &all;
  TestedSink tw(*mesh, 1, Y, &Z);
  as.assemble(w, tw, wo);
  CHECK((tw.r - ts.r).norm() <= 1e-13 * ts.r.norm());
  // per-element columns give the weighted sum
  Vector rho = Vector::Zero(mesh->num_elements());
  for (int k = 0; k < mesh->num_elements(); k += 3) rho(k) = 0.5 + 0.1 * k;
  std::vector<int> some;
  for (int k = 0; k < mesh->num_elements(); k += 3) some.push_back(k);
  wo.weights = &rho;
  wo.elements = &some;
  TestedSink th(*mesh, 1, Y, nullptr);
  as.assemble(w, th, wo);
  CHECK((th.r - es.columns * rho).norm() <= 1e-12 * es.columns.norm());
}

TEST_CASE("galerkin with the full basis reproduces the hf solution") {
  auto adv = linear_problem();
  auto mesh = build_structured_mesh(1.0, 1.0, 3, 3, 2);
  Assembler as(adv, mesh);
  const Vector w = solve_hf(as);
  const Matrix Z = Matrix::Identity(as.size(), as.size());
  const MapGeometry geo = identity_geometry(*mesh);
  RomReport rep;
  GaussNewtonOptions o;
  o.grad_tol = 1e-10;
  const Vector a = galerkin_solve(as, Z, geo, Vector::Zero(as.size()), o, &rep);
  CHECK(rep.converged);
  CHECK((a - w).norm() <= 1e-8 * w.norm());
}

TEST_CASE("minimum residual matches the normal equations on a linear problem") {
  auto adv = linear_problem();
  auto mesh = build_structured_mesh(1.0, 1.0, 4, 3, 2);
  Assembler as(adv, mesh);
  const NormPair norms = assemble_norms(*mesh, 1);
  const RieszSolver Y(norms.Y);
  const Matrix Z = orthonormalize(random_matrix(as.size(), 4, 9), Matrix(norms.X));
  const MapGeometry geo = identity_geometry(*mesh);
  AssemblyOptions ao;
  Vector R0;
  SparseMatrix J;
  as.residual_and_jacobian(Vector::Zero(as.size()), R0, J, ao);
  const Matrix AZ = J * Z;
  const Matrix Yd(norms.Y);
  const Matrix YiAZ = Yd.ldlt().solve(AZ);
  const Vector oracle = (AZ.transpose() * YiAZ).ldlt().solve(-(YiAZ.transpose() * R0));
  RomReport rep;
  const Vector a = minres_solve(as, Z, Y, geo, Vector::Zero(4), {}, &rep);
  CHECK(rep.converged);
  CHECK((a - oracle).norm() <= 1e-8 * oracle.norm());
  // Galerkin on the same problem: the dense projection oracle
  const Vector ga = galerkin_solve(as, Z, geo, Vector::Zero(4));
  const Vector go = (Z.transpose() * AZ).lu().solve(-(Z.transpose() * R0));
  CHECK((ga - go).norm() <= 1e-8 * go.norm());
}

TEST_CASE("approximate minimum residual with a complete test space is exact minimum residual") {
  auto law = make_model("burgers");
  auto mesh = build_structured_mesh(1.0, 0.8, 4, 3, 2);
  Assembler as(law, mesh);
  as.set_parameter(burgers_mu(1.0, 0.25));
  const NormPair norms = assemble_norms(*mesh, 1);
  const RieszSolver Y(norms.Y);
  const Vector w = solve_hf(as);
  Matrix V(as.size(), 3);
  V.col(0) = w;
  V.col(1) = w.cwiseAbs2();
  V.col(2) = Vector::Ones(as.size());
  const Matrix Z = orthonormalize(V, Matrix(norms.X));
  const Matrix Yd(norms.Y);
  const Matrix YJ = Eigen::LLT<Matrix>(Yd).matrixU().solve(Matrix::Identity(Yd.rows(), Yd.cols()));
  CHECK((YJ.transpose() * Yd * YJ - Matrix::Identity(Yd.rows(), Yd.cols())).norm() < 1e-8);
  const MapGeometry geo = identity_geometry(*mesh);
  const Vector a0 = Z.transpose() * (norms.X * w) * 0.95;
  RomReport r1, r2;
  GaussNewtonOptions o;
  o.max_iter = 60;
  o.grad_tol = 1e-11;
  const Vector am = minres_solve(as, Z, Y, geo, a0, o, &r1);
  const Vector aa = amr_solve(as, Z, YJ, geo, a0, {}, o, &r2);
  CHECK((am - aa).norm() <= 1e-8 * am.norm());
  CHECK(r1.residual_norm == doctest::Approx(r2.residual_norm).epsilon(1e-6));
  // snapshot in the trial space: residual at the hf tolerance
  const Vector as0 = minres_solve(as, Z, Y, geo, Vector::Zero(3), o, &r1);
  CHECK(r1.residual_norm <= 1e-7);
  CHECK((Z * as0 - w).norm() <= 1e-6 * w.norm());
}

TEST_CASE("test space vectors are Riesz representers of the Jacobian action") {
  auto law = make_model("burgers");
  auto mesh = build_structured_mesh(1.0, 0.8, 4, 3, 2);
  auto space = std::make_shared<MapSpace>(3, 1.0, 0.8);
  const NormPair norms = assemble_norms(*mesh, 1);
  const RieszSolver Y(norms.Y);
  TrainingSet ts;
  ts.law = law;
  ts.mesh = mesh;
  ts.space = space;
  ts.W = Matrix::Zero(space->size(), 1);
  ts.W(2, 0) = 1.0;
  ts.coefficients = Matrix::Zero(1, 3);
  ts.mapped.resize(hf_size(*mesh, 1), 3);
  for (int k = 0; k < 3; ++k) {
    Assembler as(law, mesh);
    ts.mus.push_back(burgers_mu(0.8 + 0.3 * k, 0.2));
    as.set_parameter(ts.mus.back());
    ts.mapped.col(k) = solve_hf(as);
    ts.coefficients(0, k) = 0.01 * k;
  }
  const PODResult p = pod(ts.mapped, 1e-4, &norms.X, 2);
  const Matrix& Z = p.modes;
  const TestSpaceResult t = build_test_space(ts, Z, Y, 4);
  CHECK(t.YJ.cols() == 4);
  CHECK((t.YJ.transpose() * norms.Y * t.YJ - Matrix::Identity(4, 4)).norm() < 1e-10);
  // oracle for k = 2: dense Jacobian in the mapped configuration
  Assembler as(law, mesh);
  as.set_parameter(ts.mus[2]);
  const GeometryBasis gb(*mesh, *space, ts.W);
  const MapGeometry geo = gb.geometry(ts.coefficients.col(2));
  AssemblyOptions ao;
  ao.geometry = &geo;
  ao.viscosity_derivative = true;
  Vector R;
  SparseMatrix J;
  as.residual_and_jacobian(ts.mapped.col(2), R, J, ao);
  const Matrix lhs = norms.Y * t.eta.middleCols(4, 2);
  const Matrix rhs = J * Z;
  CHECK((lhs - rhs).norm() <= 1e-10 * rhs.norm());

  // continuous variant
  const TestSpaceResult tc = build_test_space(ts, Z, Y, 4, 1e-4, true);
  for (int j = 0; j < 4; ++j) CHECK((to_continuous(*mesh, 1, tc.YJ.col(j)) - tc.YJ.col(j)).norm() < 1e-10);
}

TEST_CASE("parameter-independent linear problem: the test space is the supremizer space") {
  auto adv = linear_problem();
  auto mesh = build_structured_mesh(1.0, 1.0, 4, 3, 2);
  auto space = std::make_shared<MapSpace>(2, 1.0, 1.0);
  const NormPair norms = assemble_norms(*mesh, 1);
  const RieszSolver Y(norms.Y);
  TrainingSet ts{adv, mesh, space, {}, Matrix(), Matrix::Zero(space->size(), 1), Matrix::Zero(1, 4)};
  ts.mapped = random_matrix(hf_size(*mesh, 1), 4, 2);
  for (int k = 0; k < 4; ++k) ts.mus.push_back(Vector::Zero(1));
  const Matrix Z = orthonormalize(random_matrix(hf_size(*mesh, 1), 3, 8), Matrix(norms.X));
  const TestSpaceResult t = build_test_space(ts, Z, Y, 0, 1e-10);
  CHECK(t.YJ.cols() == 3);
  CHECK(t.eigenvalues(3) <= 1e-12 * t.eigenvalues(0));
}

TEST_CASE("unit weights satisfy the quadrature constraints") {
  auto law = make_model("burgers");
  auto mesh = build_structured_mesh(1.0, 0.8, 6, 4, 2);
  auto space = std::make_shared<MapSpace>(2, 1.0, 0.8);
  const NormPair norms = assemble_norms(*mesh, 1);
  const RieszSolver Y(norms.Y);
  TrainingSet ts{law, mesh, space, {}, Matrix(hf_size(*mesh, 1), 3), Matrix::Zero(space->size(), 1), Matrix::Zero(1, 3)};
  for (int k = 0; k < 3; ++k) {
    Assembler as(law, mesh);
    ts.mus.push_back(burgers_mu(0.7 + 0.4 * k, 0.3));
    as.set_parameter(ts.mus.back());
    ts.mapped.col(k) = solve_hf(as);
  }
  const PODResult p = pod(ts.mapped, 1e-4, &norms.X, 2);
  const TestSpaceResult t = build_test_space(ts, p.modes, Y, 4);
  Matrix G;
  Vector b;
  eqp_system(ts, p.modes, t.YJ, norms.X, G, b);
  CHECK(G.rows() == 1 + 3 * 2);
  CHECK(G.row(0).sum() == doctest::Approx(1.0));
  CHECK((G * Vector::Ones(G.cols()) - b).norm() <= 1e-12 * b.norm());
  NnlsOptions no;
  no.step_tol = 1e-14;
  const EqpResult e = build_eqp(ts, p.modes, t.YJ, norms.X, no);
  CHECK(e.rho.minCoeff() >= 0.0);
  CHECK(e.constraint_residual <= 1e-8);
  CHECK(static_cast<int>(e.sampled.size()) < mesh->num_elements());
}

TEST_CASE("approximate minimum residual bounds on random linear problems") {
  const int n = 40;
  for (unsigned seed = 1; seed <= 4; ++seed) {
    const Matrix A = Matrix::Identity(n, n) * 3.0 + random_matrix(n, n, seed);
    const Matrix Bx = random_matrix(n, n, 100 + seed), By = random_matrix(n, n, 200 + seed);
    const Matrix X = Bx.transpose() * Bx + n * Matrix::Identity(n, n);
    const Matrix Yn = By.transpose() * By + n * Matrix::Identity(n, n);
    const Vector F = random_matrix(n, 1, 300 + seed).col(0);
    const Matrix Z = random_matrix(n, 4, 400 + seed);
    // test space: Y-orthonormal basis of 8 random directions
    const Matrix YJ = orthonormalize(random_matrix(n, 8, 500 + seed), Yn);
    const AmrBoundReport r = verify_amr_bounds(A, F, X, Yn, Z, YJ);
    CHECK(r.beta > 0.0);
    CHECK(r.delta_test > 0.0);
    CHECK(r.error_bound_holds);
    CHECK(r.stability_bound_holds);
    CHECK(r.error >= r.best_error * (1.0 - 1e-10));

    // the optimal test space: delta = 1
    const Matrix S = orthonormalize(Yn.ldlt().solve(A * Z), Yn);
    const AmrBoundReport o = verify_amr_bounds(A, F, X, Yn, Z, S);
    CHECK(o.delta_test == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(o.error <= o.gamma / o.beta * o.best_error * (1.0 + 1e-9));
  }
  // SPD, X = Y, Y_J = Z: Galerkin, constants are extreme Rayleigh quotients
  const Matrix B = random_matrix(n, n, 77);
  const Matrix A = B.transpose() * B + Matrix::Identity(n, n);
  const Matrix I = Matrix::Identity(n, n);
  const Matrix Z = orthonormalize(random_matrix(n, 5, 78), I);
  const AmrBoundReport g = verify_amr_bounds(A, random_matrix(n, 1, 79).col(0), I, I, Z, Z);
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  CHECK(g.beta == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-9));
  CHECK(g.gamma == doctest::Approx(es.eigenvalues()(n - 1)).epsilon(1e-9));
  Eigen::SelfAdjointEigenSolver<Matrix> ez(Z.transpose() * A * Z);
  CHECK(g.beta_NJ == doctest::Approx(ez.eigenvalues()(0)).epsilon(1e-9));
  CHECK_THROWS_AS(verify_amr_bounds(Matrix::Zero(n, n), Vector::Ones(n), I, I, Z, Z), NotInfSupStable);
}

TEST_CASE("empirical quadrature residual bound") {
  const int K = 12, N = 3, m = 6;
  std::vector<Matrix> A, Q;
  std::vector<Vector> f;
  for (int k = 0; k < K; ++k) {
    A.push_back(random_matrix(m, N, 10 + k));
    Q.push_back(0.2 * random_matrix(m, N, 40 + k));
    f.push_back(random_matrix(m, 1, 70 + k).col(0));
  }
  // r_k(a) = A_k a + (Q_k a) .* (Q_k a) + f_k
  ElementResidualModel model;
  model.elements = K;
  model.r = [&](int k, const Vector& a) -> Vector {
    const Vector q = Q[k] * a;
    return A[k] * a + q.cwiseProduct(q) + f[k];
  };
  model.jac = [&](int k, const Vector& a) -> Matrix {
    const Vector q = Q[k] * a;
    return A[k] + 2.0 * q.asDiagonal() * Q[k];
  };
  const BrrBoundReport exact = verify_brr_residual_bound(model, Vector::Ones(K), Vector::Zero(N));
  CHECK(exact.stationarity < 1e-8);
  CHECK(exact.holds);
  Vector rho = Vector::Ones(K);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.8, 1.2);
  for (int k = 0; k < K; ++k) rho(k) = u(rng);
  const BrrBoundReport r = verify_brr_residual_bound(model, rho, Vector::Zero(N));
  CHECK(r.eq_gradient < 1e-10);
  CHECK(r.stationarity > 0.0);
  CHECK(r.holds);
  CHECK(r.term1 + r.term2 <= 10.0 * r.stationarity);
}
