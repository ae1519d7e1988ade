#include "strobe/rom.hpp"

#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>

namespace strobe {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// w = Z alpha
Vector expand(const Matrix& Z, const Vector& alpha) { return Z * alpha; }

}  // namespace

Matrix element_rows(const SpaceTimeMesh& mesh, int D, const Matrix& M, int e) {
  const int n = mesh.nodes_per_element();
  Matrix out(D * n, M.cols());
  for (int d = 0; d < D; ++d) out.middleRows(d * n, n) = M.middleRows(dof_index(mesh, 0, e, d), n);
  return out;
}

// ------------------------------------------------------------------ sinks

TestedSink::TestedSink(const SpaceTimeMesh& mesh, int D, const Matrix& Y, const Matrix* Z)
    : mesh_(mesh), D_(D), Y_(Y), Z_(Z) {
  r = Vector::Zero(Y.cols());
  if (Z) J = Matrix::Zero(Y.cols(), Z->cols());
}

void TestedSink::add_residual(int e, const Vector& re) {
  r.noalias() += element_rows(mesh_, D_, Y_, e).transpose() * re;
}

void TestedSink::add_jacobian(int row_e, int col_e, const Matrix& B) {
  if (!Z_) return;
  const Matrix BZ = B * element_rows(mesh_, D_, *Z_, col_e);
  J.noalias() += element_rows(mesh_, D_, Y_, row_e).transpose() * BZ;
}

ProjectedSink::ProjectedSink(const SpaceTimeMesh& mesh, int D, const Matrix* Z) : mesh_(mesh), D_(D), Z_(Z) {
  R = Vector::Zero(hf_size(mesh, D));
  if (Z) JZ = Matrix::Zero(R.size(), Z->cols());
}

void ProjectedSink::add_residual(int e, const Vector& re) {
  const int n = mesh_.nodes_per_element();
  for (int d = 0; d < D_; ++d) R.segment(dof_index(mesh_, 0, e, d), n) += re.segment(d * n, n);
}

void ProjectedSink::add_jacobian(int row_e, int col_e, const Matrix& B) {
  if (!Z_) return;
  const int n = mesh_.nodes_per_element();
  const Matrix BZ = B * element_rows(mesh_, D_, *Z_, col_e);
  for (int d = 0; d < D_; ++d) JZ.middleRows(dof_index(mesh_, 0, row_e, d), n) += BZ.middleRows(d * n, n);
}

ElementTestedSink::ElementTestedSink(const SpaceTimeMesh& mesh, int D, const Matrix& Y, const Matrix& Z)
    : mesh_(mesh), D_(D), Y_(Y), Z_(Z) {
  columns = Matrix::Zero(Y.cols(), mesh.num_elements());
  J = Matrix::Zero(Y.cols(), Z.cols());
}

void ElementTestedSink::add_residual(int e, const Vector& re) {
  if (current_ < 0) throw InvalidArgument("element sink: contribution outside an element pass");
  columns.col(current_).noalias() += element_rows(mesh_, D_, Y_, e).transpose() * re;
}

void ElementTestedSink::add_jacobian(int row_e, int col_e, const Matrix& B) {
  const Matrix BZ = B * element_rows(mesh_, D_, Z_, col_e);
  J.noalias() += element_rows(mesh_, D_, Y_, row_e).transpose() * BZ;
}

// ----------------------------------------------------------- Gauss-Newton

Vector gauss_newton(const ReducedResidual& f, Vector alpha, const GaussNewtonOptions& opts, RomReport* report,
                    bool square) {
  const auto t0 = std::chrono::steady_clock::now();
  RomReport rep;
  Vector r;
  Matrix Jr;
  f(alpha, r, &Jr);
  if (!r.allFinite()) throw InvalidArgument("Gauss-Newton: non-finite residual at the initial guess");
  int it = 0;
  for (;; ++it) {
    const Vector g = Jr.transpose() * r;
    rep.gradient_norm = g.norm();
    rep.residual_norm = r.norm();
    if ((square ? rep.residual_norm : rep.gradient_norm) <= opts.grad_tol) {
      rep.converged = true;
      rep.status = "converged";
      break;
    }
    if (it >= opts.max_iter) {
      rep.status = "iteration limit";
      break;
    }
    Vector dir;
    if (square) {
      Eigen::PartialPivLU<Matrix> lu(Jr);
      dir = lu.solve(-r);
    } else {
      dir = Jr.colPivHouseholderQr().solve(-r);
    }
    if (!dir.allFinite()) {
      rep.status = "singular Jacobian";
      break;
    }
    const double phi0 = 0.5 * r.squaredNorm();
    const double slope = square ? -r.squaredNorm() : g.dot(dir);
    if (!(slope < 0.0)) {
      rep.status = "not a descent direction";
      break;
    }
    double s = 1.0;
    bool ok = false;
    Vector rt;
    Matrix Jt;
    for (int b = 0; b < opts.max_backtracks; ++b, s *= 0.5) {
      const Vector at = alpha + s * dir;
      try {
        f(at, rt, b == 0 ? &Jt : nullptr);
      } catch (const DryState&) {
        continue;
      } catch (const DegenerateMap&) {
        continue;
      }
      if (rt.allFinite() && 0.5 * rt.squaredNorm() <= phi0 + opts.armijo * s * slope) {
        ok = true;
        if (b > 0) f(at, rt, &Jt);
        alpha = at;
        break;
      }
    }
    if (!ok) {
      rep.status = "line search failed";
      break;
    }
    r = rt;
    Jr = Jt;
    if (s * dir.norm() <= opts.step_tol * (1.0 + alpha.norm())) {
      ++it;
      rep.residual_norm = r.norm();
      rep.gradient_norm = (Jr.transpose() * r).norm();
      rep.converged = !square || rep.residual_norm <= 10.0 * opts.grad_tol;
      rep.status = "step below tolerance";
      break;
    }
  }
  rep.iterations = it;
  rep.seconds = seconds_since(t0);
  if (report) *report = rep;
  return alpha;
}

// ------------------------------------------------------------------ ROMs

namespace {

AssemblyOptions rom_options(const MapGeometry& geo, bool jacobian, const GaussNewtonOptions& opts,
                            const ElementQuadrature* quad = nullptr) {
  AssemblyOptions ao;
  ao.geometry = &geo;
  ao.jacobian = jacobian;
  ao.viscosity_derivative = jacobian && opts.viscosity_derivative;
  if (quad && !quad->full()) {
    ao.elements = &quad->elements;
    ao.weights = &quad->weights;
  }
  return ao;
}

}  // namespace

Vector galerkin_solve(const Assembler& as, const Matrix& Z, const MapGeometry& geo, Vector alpha0,
                      const GaussNewtonOptions& opts, RomReport* report) {
  if (Z.rows() != as.size() || alpha0.size() != Z.cols()) throw InvalidArgument("galerkin: dimension mismatch");
  const ReducedResidual f = [&](const Vector& a, Vector& r, Matrix* Jr) {
    TestedSink sink(as.mesh(), as.dim(), Z, Jr ? &Z : nullptr);
    as.assemble(expand(Z, a), sink, rom_options(geo, Jr != nullptr, opts));
    r = sink.r;
    if (Jr) *Jr = sink.J;
  };
  return gauss_newton(f, std::move(alpha0), opts, report, true);
}

Vector minres_solve(const Assembler& as, const Matrix& Z, const RieszSolver& Y, const MapGeometry& geo,
                    Vector alpha0, const GaussNewtonOptions& opts, RomReport* report) {
  if (Z.rows() != as.size() || alpha0.size() != Z.cols()) throw InvalidArgument("minres: dimension mismatch");
  const ReducedResidual f = [&](const Vector& a, Vector& r, Matrix* Jr) {
    ProjectedSink sink(as.mesh(), as.dim(), Jr ? &Z : nullptr);
    as.assemble(expand(Z, a), sink, rom_options(geo, Jr != nullptr, opts));
    if (Jr) {
      Matrix both(sink.R.size(), Z.cols() + 1);
      both.col(0) = sink.R;
      both.rightCols(Z.cols()) = sink.JZ;
      const Matrix wb = Y.whiten(both);
      r = wb.col(0);
      *Jr = wb.rightCols(Z.cols());
    } else {
      r = Y.whiten(sink.R).col(0);
    }
  };
  return gauss_newton(f, std::move(alpha0), opts, report, false);
}

Vector amr_solve(const Assembler& as, const Matrix& Z, const Matrix& YJ, const MapGeometry& geo, Vector alpha0,
                 const ElementQuadrature& quad, const GaussNewtonOptions& opts, RomReport* report) {
  if (Z.rows() != as.size() || YJ.rows() != as.size() || alpha0.size() != Z.cols())
    throw InvalidArgument("amr: dimension mismatch");
  const ReducedResidual f = [&](const Vector& a, Vector& r, Matrix* Jr) {
    TestedSink sink(as.mesh(), as.dim(), YJ, Jr ? &Z : nullptr);
    as.assemble(expand(Z, a), sink, rom_options(geo, Jr != nullptr, opts, &quad));
    r = sink.r;
    if (Jr) *Jr = sink.J;
  };
  return gauss_newton(f, std::move(alpha0), opts, report, false);
}

// --------------------------------------------------------- offline builds

namespace {

void check_training(const TrainingSet& ts, const Matrix& Z) {
  const auto n = static_cast<Eigen::Index>(ts.mus.size());
  if (!ts.law || !ts.mesh || !ts.space) throw InvalidArgument("training set is incomplete");
  if (ts.mapped.cols() != n || ts.coefficients.cols() != n) throw InvalidArgument("training set sizes disagree");
  if (ts.W.rows() != ts.space->size() || ts.W.cols() != ts.coefficients.rows())
    throw InvalidArgument("training maps have the wrong shape");
  if (Z.rows() != ts.mapped.rows()) throw InvalidArgument("trial basis has the wrong length");
}

}  // namespace

TestSpaceResult build_test_space(const TrainingSet& ts, const Matrix& Z, const RieszSolver& Y, int J,
                                 double tol_pod, bool continuous, const GaussNewtonOptions& opts) {
  check_training(ts, Z);
  const int n = static_cast<int>(ts.mus.size());
  const int N = static_cast<int>(Z.cols());
  const int D = ts.law->dim();
  const GeometryBasis gb(*ts.mesh, *ts.space, ts.W);
  TestSpaceResult out;
  out.eta.resize(Z.rows(), static_cast<Eigen::Index>(n) * N);
  parallel_for(n, [&](std::size_t k) {
    Assembler as(ts.law, ts.mesh);
    as.set_parameter(ts.mus[k]);
    const MapGeometry geo = gb.geometry(ts.coefficients.col(k));
    ProjectedSink sink(*ts.mesh, D, &Z);
    as.assemble(ts.mapped.col(k), sink, rom_options(geo, true, opts));
    Matrix eta = Y.solve(sink.JZ);
    if (continuous)
      for (int j = 0; j < N; ++j) eta.col(j) = to_continuous(*ts.mesh, D, eta.col(j));
    out.eta.middleCols(static_cast<Eigen::Index>(k) * N, N) = eta;
  });
  const PODResult p = pod(out.eta, tol_pod, &Y.matrix(), J > 0 ? J : 0);
  out.YJ = p.modes;
  out.eigenvalues = p.eigenvalues;
  return out;
}

void eqp_system(const TrainingSet& ts, const Matrix& Z, const Matrix& YJ, const SparseMatrix& X, Matrix& G, Vector& b,
                const GaussNewtonOptions& opts) {
  check_training(ts, Z);
  const int n = static_cast<int>(ts.mus.size());
  const int N = static_cast<int>(Z.cols());
  const int D = ts.law->dim();
  const SpaceTimeMesh& mesh = *ts.mesh;
  const int ne = mesh.num_elements();
  const GeometryBasis gb(mesh, *ts.space, ts.W);
  G.resize(1 + static_cast<Eigen::Index>(n) * N, ne);
  b.resize(G.rows());
  double area = 0.0;
  const auto& ref = mesh.reference();
  for (int k = 0; k < ne; ++k) {
    double ak = 0.0;
    for (double wq : ref.volume_rule().weights) ak += wq * mesh.element(k).det;
    G(0, k) = ak;
    area += ak;
  }
  G.row(0) /= area;
  b(0) = 1.0;
  parallel_for(n, [&](std::size_t k) {
    Assembler as(ts.law, ts.mesh);
    as.set_parameter(ts.mus[k]);
    const MapGeometry geo = gb.geometry(ts.coefficients.col(k));
    const Vector alpha = Z.transpose() * (X * ts.mapped.col(k));
    ElementTestedSink sink(mesh, D, YJ, Z);
    as.assemble(Z * alpha, sink, rom_options(geo, true, opts));
    Matrix Gk = sink.J.transpose() * sink.columns;
    Vector bk = Gk.rowwise().sum();
    double scale = bk.norm();
    if (!(scale > 1e-14 * std::max(1.0, Gk.norm()))) scale = std::max(Gk.norm(), 1e-300);
    const Eigen::Index row = 1 + static_cast<Eigen::Index>(k) * N;
    G.middleRows(row, N) = Gk / scale;
    b.segment(row, N) = bk / scale;
  });
}

EqpResult build_eqp(const TrainingSet& ts, const Matrix& Z, const Matrix& YJ, const SparseMatrix& X,
                    const NnlsOptions& nnls_opts, const GaussNewtonOptions& opts) {
  EqpResult out;
  eqp_system(ts, Z, YJ, X, out.G, out.b, opts);
  out.nnls = nnls(out.G, out.b, nnls_opts);
  out.rho = out.nnls.x;
  for (Eigen::Index k = 0; k < out.rho.size(); ++k)
    if (out.rho(k) > 0.0) out.sampled.push_back(static_cast<int>(k));
  out.constraint_residual = out.nnls.residual_norm;
  return out;
}

// ----------------------------------------------------------------- online

OnlineSolver::OnlineSolver(const ReducedModel& rom, ModelPtr law, bool hyper, GaussNewtonOptions opts)
    : rom_(rom), as_(std::move(law), rom.mesh), hyper_(hyper), opts_(opts) {
  if (!rom.mesh || !rom.space) throw InvalidArgument("online: reduced model is incomplete");
  if (as_.law().name() != rom.model) throw InvalidArgument("online: model mismatch");
  if (hyper) {
    if (rom.sampled.empty()) throw InvalidArgument("online: no sampled elements");
    elements_ = rom.sampled;
    quad_.elements = rom.sampled;
    quad_.weights = rom.rho;
  }
  geo_ = std::make_unique<GeometryBasis>(*rom.mesh, *rom.space, rom.W, elements_);
}

OnlineResult OnlineSolver::solve(const Vector& mu) const {
  const auto t0 = std::chrono::steady_clock::now();
  Vector a = rom_.map_regressor.predict(mu);
  OnlineResult res;
  try {
    (void)geo_->geometry(a);
  } catch (const DegenerateMap&) {
    int best = 0;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rom_.train_mus.size(); ++k) {
      const double d = (rom_.map_regressor.box.normalize(rom_.train_mus[k]) - rom_.map_regressor.box.normalize(mu)).norm();
      if (d < dmin) {
        dmin = d;
        best = static_cast<int>(k);
      }
    }
    std::cerr << "warning: predicted map for mu = " << mu.transpose() << " is not admissible, using the nearest training map\n";
    a = rom_.train_coefficients.col(best);
    res.map_fallback = true;
  }
  OnlineResult r = solve(mu, a);
  r.map_fallback = res.map_fallback;
  r.seconds = seconds_since(t0);
  return r;
}

OnlineResult OnlineSolver::solve(const Vector& mu, const Vector& a) const {
  const auto t0 = std::chrono::steady_clock::now();
  OnlineResult res;
  res.a = a;
  res.alpha0 = rom_.alpha_regressor.predict(mu);
  const MapGeometry geo = geo_->geometry(a);
  Assembler& as = const_cast<Assembler&>(as_);
  as.set_parameter(mu);
  res.alpha = amr_solve(as, rom_.Z, rom_.YJ, geo, res.alpha0, quad_, opts_, &res.report);
  res.seconds = seconds_since(t0);
  return res;
}

// ----------------------------------------------------------------- bounds

namespace {

// Upper Cholesky factor R with M = R^T R.
Matrix chol_upper(const Matrix& M) {
  Eigen::LLT<Matrix> llt(M);
  if (llt.info() != Eigen::Success) throw FactorizationFailure("dense Cholesky failed");
  return llt.matrixU();
}

Eigen::VectorXd singular_values(const Matrix& A) { return Eigen::JacobiSVD<Matrix>(A).singularValues(); }

}  // namespace

AmrBoundReport verify_amr_bounds(const Matrix& A, const Vector& F, const Matrix& X, const Matrix& Y, const Matrix& Z,
                                 const Matrix& YJ) {
  const Eigen::Index m = A.rows(), n = A.cols();
  if (m != n || F.size() != m || X.rows() != n || Y.rows() != m || Z.rows() != n || YJ.rows() != m)
    throw InvalidArgument("amr bounds: dimension mismatch");
  AmrBoundReport rep;
  const Matrix Rx = chol_upper(X), Ry = chol_upper(Y);
  // ||A u||_{Y^-1} / ||u||_X
  const Matrix At = Ry.transpose().triangularView<Eigen::Lower>().solve(
      Rx.transpose().triangularView<Eigen::Lower>().solve(A.transpose()).transpose());
  const Vector s = singular_values(At);
  rep.gamma = s(0);
  rep.beta = s(s.size() - 1);
  if (!(rep.beta > 1e-14 * rep.gamma)) throw NotInfSupStable("amr bounds: the operator is not inf-sup stable");

  const Matrix Rz = chol_upper(Z.transpose() * X * Z);
  const Matrix B = YJ.transpose() * A * Z;
  const Matrix Bn = Rz.transpose().triangularView<Eigen::Lower>().solve(B.transpose()).transpose();
  const Vector sb = singular_values(Bn);
  rep.beta_NJ = sb.size() > 0 && B.rows() >= B.cols() ? sb(sb.size() - 1) : 0.0;

  // supremizers of the trial space, Y-orthonormalized
  const Matrix S = Y.ldlt().solve(A * Z);
  const Matrix Rs = chol_upper(S.transpose() * Y * S);
  const Matrix Pn = Rs.transpose().triangularView<Eigen::Lower>().solve((YJ.transpose() * Y * S).transpose()).transpose();
  const Vector sp = singular_values(Pn);
  rep.delta_test = Pn.rows() >= Pn.cols() ? sp(sp.size() - 1) : 0.0;

  rep.u_star = A.fullPivLu().solve(F);
  const Vector c = B.colPivHouseholderQr().solve(YJ.transpose() * F);
  rep.u_hat = Z * c;
  auto xnorm = [&](const Vector& v) { return std::sqrt(std::max(0.0, v.dot(X * v))); };
  rep.error = xnorm(rep.u_hat - rep.u_star);
  const Vector cb = (Z.transpose() * X * Z).ldlt().solve(Z.transpose() * X * rep.u_star);
  rep.best_error = xnorm(Z * cb - rep.u_star);
  if (rep.delta_test > 0.0) {
    rep.bound = rep.gamma / (rep.delta_test * rep.beta) * rep.best_error;
    rep.error_bound_holds = rep.error <= rep.bound * (1.0 + 1e-9) + 1e-13 * xnorm(rep.u_star);
  }
  rep.stability_bound_holds = rep.beta_NJ >= rep.delta_test * rep.beta * (1.0 - 1e-9);
  return rep;
}

BrrBoundReport verify_brr_residual_bound(const ElementResidualModel& m, const Vector& rho, Vector alpha0) {
  if (rho.size() != m.elements) throw InvalidArgument("brr bound: weight vector has the wrong length");
  auto sum = [&](const Vector& w, const Vector& a, Vector& R, Matrix* J) {
    R = m.r(0, a) * w(0);
    if (J) *J = m.jac(0, a) * w(0);
    for (int k = 1; k < m.elements; ++k) {
      R += w(k) * m.r(k, a);
      if (J) *J += w(k) * m.jac(k, a);
    }
  };
  GaussNewtonOptions o;
  o.grad_tol = 1e-13;
  o.max_iter = 200;
  o.step_tol = 0.0;
  const ReducedResidual f = [&](const Vector& a, Vector& r, Matrix* J) { sum(rho, a, r, J); };
  BrrBoundReport rep;
  rep.alpha = gauss_newton(f, std::move(alpha0), o, nullptr, false);
  Vector Req, Rhf;
  Matrix Jeq, Jhf;
  sum(rho, rep.alpha, Req, &Jeq);
  sum(Vector::Ones(m.elements), rep.alpha, Rhf, &Jhf);
  rep.stationarity = (Jhf.transpose() * Rhf).norm();
  rep.eq_gradient = (Jeq.transpose() * Req).norm();
  rep.term1 = singular_values(Jhf - Jeq)(0) * Req.norm();
  rep.term2 = (Jhf.transpose() * (Rhf - Req)).norm();
  rep.holds = rep.stationarity <= rep.term1 + rep.term2 + rep.eq_gradient + 1e-12 * (1.0 + rep.stationarity);
  return rep;
}

}  // namespace strobe
