#include "strobe/registration.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace strobe {

QuadraturePoints volume_points(const SpaceTimeMesh& mesh) {
  const auto& rule = mesh.reference().volume_rule();
  QuadraturePoints pts;
  pts.nq = static_cast<int>(rule.size());
  const int ne = mesh.num_elements();
  pts.X.reserve(static_cast<std::size_t>(ne) * pts.nq);
  pts.w.resize(static_cast<Eigen::Index>(ne) * pts.nq);
  for (int k = 0; k < ne; ++k)
    for (int q = 0; q < pts.nq; ++q) {
      pts.X.push_back(mesh.to_physical(k, rule.points[q]));
      pts.w(static_cast<Eigen::Index>(k) * pts.nq + q) = rule.weights[q] * mesh.element(k).det;
    }
  return pts;
}

// ------------------------------------------------------------------ fields

ScalarField::ScalarField(std::shared_ptr<const SpaceTimeMesh> mesh, const Vector& coeffs)
    : mesh_(std::move(mesh)), coeffs_(coeffs) {
  if (coeffs_.size() != mesh_->num_nodes()) throw InvalidArgument("scalar field has the wrong length");
}

double ScalarField::eval(Vec2 x, Vec2* grad) const {
  mesh_->clamp_to_domain(x);
  const int k = mesh_->locate(x);
  const Vec2 xi = mesh_->to_reference(k, x);
  const auto& ref = mesh_->reference();
  const int n = ref.num_nodes();
  const auto u = coeffs_.segment(static_cast<Eigen::Index>(k) * n, n);
  if (grad) {
    const Eigen::Vector2d gref = ref.gradients(xi).transpose() * u;
    *grad = mesh_->element(k).inverse_jacobian.transpose() * gref;
  }
  return ref.values(xi).dot(u);
}

Vector filter_sensor(const SpaceTimeMesh& mesh, const Vector& field, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidArgument("filter window must be odd and positive");
  const int lx = mesh.lattice_nx(), lt = mesh.lattice_nt();
  if (window > lx) throw InvalidArgument("filter window exceeds the node lattice");
  if (field.size() != mesh.num_nodes()) throw InvalidArgument("filter: field has the wrong length");
  const Vector c = to_continuous(mesh, 1, field);
  Matrix lat(lx, lt);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const auto [a, b] = mesh.lattice_index(i);
    lat(a, b) = c(i);
  }
  Matrix out(lx, lt);
  const int h = window / 2;
  for (int b = 0; b < lt; ++b)
    for (int a = 0; a < lx; ++a) {
      const int r = std::min({h, a, lx - 1 - a});
      out(a, b) = lat.col(b).segment(a - r, 2 * r + 1).mean();
    }
  Vector res(field.size());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const auto [a, b] = mesh.lattice_index(i);
    res(i) = out(a, b);
  }
  return res;
}

Vector sensor_of(const SpaceTimeMesh& mesh, int D, int component, const Vector& state, int window) {
  if (state.size() != hf_size(mesh, D)) throw InvalidArgument("sensor: state has the wrong length");
  const Vector s = state.segment(static_cast<Eigen::Index>(component) * mesh.num_nodes(), mesh.num_nodes());
  return window > 1 ? filter_sensor(mesh, s, window) : s;
}

// --------------------------------------------------------------- templates

bool TemplateSpace::add(const Vector& values) {
  if (values.size() != w_.size()) throw InvalidArgument("template has the wrong number of point values");
  const double n0 = std::sqrt(values.dot(w_.cwiseProduct(values)));
  if (!(n0 > 0.0)) return false;
  Vector v = values;
  for (int pass = 0; pass < 2; ++pass)
    for (int j = 0; j < size(); ++j) v -= basis_.col(j).dot(w_.cwiseProduct(v)) * basis_.col(j);
  const double nv = std::sqrt(v.dot(w_.cwiseProduct(v)));
  if (nv <= 1e-10 * n0) return false;
  basis_.conservativeResize(values.size(), size() + 1);
  basis_.col(size() - 1) = v / nv;
  return true;
}

Vector TemplateSpace::project(const Vector& values) const {
  if (size() == 0) return Vector::Zero(values.size());
  return basis_ * (basis_.transpose() * w_.cwiseProduct(values));
}

Matrix TemplateSpace::gram() const { return basis_.transpose() * w_.asDiagonal() * basis_; }

// --------------------------------------------------------------- registrar

Registrar::Registrar(std::shared_ptr<const SpaceTimeMesh> mesh, const MapSpace& space, RegistrationParams params,
                     int bij_cells)
    : mesh_(std::move(mesh)),
      space_(space),
      params_(params),
      pts_(volume_points(*mesh_)),
      A_reg_(h2_penalty_matrix(space_)),
      bij_(space_, params.bijectivity, bij_cells) {
  if (std::abs(space_.length() - mesh_->length()) > 1e-12 || std::abs(space_.final_time() - mesh_->final_time()) > 1e-12)
    throw InvalidArgument("map space and mesh cover different rectangles");
  const Matrix V = space_.values_at(pts_.X);
  const int half = space_.size() / 2;
  B1_ = V.leftCols(half);
  B2_ = V.rightCols(half);
}

std::vector<Vec2> Registrar::mapped_points(const Vector& a) const {
  const int half = space_.size() / 2;
  const Vector p1 = B1_ * a.head(half), p2 = B2_ * a.tail(half);
  std::vector<Vec2> out(pts_.X.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pts_.X[i] + Vec2(p1(i), p2(i));
  return out;
}

Vector Registrar::compose(const ScalarField& s, const Vector& a, Matrix* grad, int* clamped) const {
  const auto x = mapped_points(a);
  const int np = pts_.size();
  Vector v(np);
  if (grad) grad->resize(np, 2);
  int out = 0;
  for (int i = 0; i < np; ++i) {
    Vec2 xi = x[i];
    if (mesh_->clamp_to_domain(xi)) ++out;
    Vec2 g;
    v(i) = s.eval(xi, grad ? &g : nullptr);
    if (grad) grad->row(i) = g.transpose();
  }
  if (clamped) *clamped = out;
  return v;
}

double Registrar::proximity(const ScalarField& s, const Vector& a, const Vector& psi) const {
  const Vector r = compose(s, a) - psi;
  return r.dot(pts_.w.cwiseProduct(r));
}

RegistrationResult Registrar::register_one(const ScalarField& s, const TemplateSpace& T, const Matrix& W,
                                           const Vector& c0) const {
  if (W.rows() != space_.size()) throw InvalidArgument("search basis does not belong to the map space");
  if (c0.size() != W.cols()) throw InvalidArgument("initial coefficients do not match the search basis");
  if (params_.xi < 0.0) throw InvalidArgument("negative H2 weight");
  const int half = space_.size() / 2;
  // Displacement components at the points as linear maps of c.
  const Matrix E1 = B1_ * W.topRows(half);
  const Matrix E2 = B2_ * W.bottomRows(half);
  const Matrix WtAW = W.transpose() * A_reg_ * W;
  const Vector& w = pts_.w;
  const double delta = bij_.budget();

  auto objective = [&](const Vector& c, Vector* grad) -> double {
    const Vector a = W * c;
    Vector gb;
    const double b = bij_.value(a, gb);
    if (!(b <= delta)) return std::numeric_limits<double>::infinity();
    const Vector p1 = E1 * c, p2 = E2 * c;
    const int np = pts_.size();
    Vector v(np), sx(np), st(np);
    for (int i = 0; i < np; ++i) {
      Vec2 g;
      v(i) = s.eval(pts_.X[i] + Vec2(p1(i), p2(i)), grad ? &g : nullptr);
      if (grad) {
        sx(i) = g.x();
        st(i) = g.y();
      }
    }
    const Vector r = v - T.project(v);
    const Vector wr = w.cwiseProduct(r);
    const double f = r.dot(wr);
    const Vector Ac = WtAW * c;
    if (grad) {
      // psi is the projection of v, so its variation drops out of the gradient
      *grad = 2.0 * (E1.transpose() * wr.cwiseProduct(sx) + E2.transpose() * wr.cwiseProduct(st));
      *grad += 2.0 * params_.xi * Ac + W.transpose() * gb;
    }
    return f + params_.xi * c.dot(Ac) + b;
  };

  RegistrationResult res;
  Vector start = c0;
  if (!std::isfinite(objective(start, nullptr))) start.setZero();
  const BfgsResult opt = bfgs_minimize(objective, start, params_.bfgs);
  res.c = opt.x;
  res.a = W * opt.x;
  res.converged = opt.converged;
  res.iterations = opt.iterations;
  const Vector v = compose(s, res.a, nullptr, &res.clamped);
  res.psi = T.project(v);
  const Vector r = v - res.psi;
  res.f_star = r.dot(w.cwiseProduct(r));
  const Vector s0 = compose(s, Vector::Zero(space_.size()));
  const double ns = s0.dot(w.cwiseProduct(s0));
  res.f_relative = ns > 0.0 ? res.f_star / ns : 0.0;
  res.functional = bij_.value(res.a);
  return res;
}

// ------------------------------------------------------------------ greedy

GreedyResult greedy_registration(const Registrar& reg, const std::vector<ScalarField>& sensors,
                                 const std::vector<Vector>& initial_templates, const GreedyOptions& opts) {
  if (sensors.empty()) throw InvalidArgument("greedy registration needs snapshots");
  if (initial_templates.empty()) throw InvalidArgument("greedy registration needs an initial template");
  const int n = static_cast<int>(sensors.size());
  const int Mhf = reg.space().size();
  GreedyResult out;
  out.templates = TemplateSpace(reg.points());
  for (const auto& t : initial_templates) out.templates.add(t);
  const int N0 = out.templates.size();
  if (opts.n_max < N0) throw InvalidArgument("N_max is smaller than the initial template dimension");

  Matrix W = Matrix::Identity(Mhf, Mhf);
  std::vector<Vector> a(n, Vector::Zero(Mhf));
  for (int N = N0; N < std::max(opts.n_max, N0 + 1); ++N) {
    std::vector<RegistrationResult> rr(n);
    parallel_for(n, [&](std::size_t k) {
      const Vector c0 = W.transpose() * a[k];
      rr[k] = reg.register_one(sensors[k], out.templates, W, c0);
    });
    GreedyIteration it;
    it.N = out.templates.size();
    Matrix A(Mhf, n);
    for (int k = 0; k < n; ++k) {
      a[k] = rr[k].a;
      A.col(k) = rr[k].a;
      it.f_relative.push_back(rr[k].f_relative);
      it.iterations.push_back(rr[k].iterations);
      if (!rr[k].converged) ++it.unconverged;
      if (rr[k].functional > reg.bijectivity().budget()) ++it.inadmissible;
      if (rr[k].f_relative > it.max_f_relative || it.worst < 0) {
        it.max_f_relative = rr[k].f_relative;
        it.worst = k;
      }
    }
    if (A.norm() > 0.0) {
      const PODResult p = pod(A, opts.tol_pod);
      W = p.modes;
      out.coefficients = p.coefficients;
      out.eigenvalues = p.eigenvalues;
    } else {
      W.resize(Mhf, 0);
      out.coefficients.resize(0, n);
      out.eigenvalues = Vector::Zero(n);
    }
    it.M = static_cast<int>(W.cols());
    out.phi_star = a;
    out.log.push_back(it);
    if (it.max_f_relative < opts.tol || N + 1 >= opts.n_max) break;
    const Vector worst = reg.compose(sensors[it.worst], a[it.worst]);
    if (!out.templates.add(worst)) break;
  }
  out.W = W;
  return out;
}

// ------------------------------------------------------------------- RePOD

namespace {

// Values of every component of U o Phi at the quadrature points (npts x D).
Matrix composed_values(const Registrar& reg, const Vector& U, int D, const Vector& a) {
  const SpaceTimeMesh& mesh = reg.mesh();
  const int nn = mesh.num_nodes();
  if (U.size() != static_cast<Eigen::Index>(nn) * D) throw InvalidArgument("state has the wrong length");
  const auto x = reg.mapped_points(a);
  const auto& ref = mesh.reference();
  const int n = ref.num_nodes();
  Matrix out(x.size(), D);
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec2 p = x[i];
    mesh.clamp_to_domain(p);
    const int k = mesh.locate(p);
    const Vector phi = ref.values(mesh.to_reference(k, p));
    for (int d = 0; d < D; ++d)
      out(static_cast<Eigen::Index>(i), d) = phi.dot(U.segment(dof_index(mesh, 0, k, d), n));
  }
  return out;
}

// Reshapes point values (npts x D) into the column layout of project_quadrature_values.
Matrix point_layout(const SpaceTimeMesh& mesh, const Matrix& v) {
  const int ne = mesh.num_elements();
  const int nq = static_cast<int>(v.rows() / ne);
  Matrix out(nq, v.cols() * ne);
  for (Eigen::Index d = 0; d < v.cols(); ++d)
    for (int k = 0; k < ne; ++k) out.col(d * ne + k) = v.col(d).segment(static_cast<Eigen::Index>(k) * nq, nq);
  return out;
}

}  // namespace

Vector mapped_snapshot(const Registrar& reg, const Vector& U, int D, const Vector& a) {
  return project_quadrature_values(reg.mesh(), point_layout(reg.mesh(), composed_values(reg, U, D, a)));
}

RePODResult repod(const Registrar& reg, const Matrix& U, int D, const Matrix& W, const Matrix& coefficients,
                  double tol_pod, const SparseMatrix& X, bool continuous) {
  const Eigen::Index n = U.cols();
  if (coefficients.cols() != n || coefficients.rows() != W.cols())
    throw InvalidArgument("repod: mapping coefficients do not match the snapshots");
  RePODResult out;
  out.mapped.resize(U.rows(), n);
  parallel_for(n, [&](std::size_t k) {
    const Vector a = W * coefficients.col(k);
    Vector m = mapped_snapshot(reg, U.col(k), D, a);
    if (continuous) m = to_continuous(reg.mesh(), D, m);
    out.mapped.col(k) = m;
  });
  out.pod = pod(out.mapped, tol_pod, &X, static_cast<int>(n));
  out.N = std::min(pod_cardinality(out.pod.eigenvalues, tol_pod), out.pod.N);
  out.alpha = out.pod.coefficients;
  return out;
}

double registered_best_fit_error(const Registrar& reg, const Vector& U, int D, const Matrix& Z, const Vector& a) {
  const SpaceTimeMesh& mesh = reg.mesh();
  const Matrix v = composed_values(reg, U, D, a);
  // g at the quadrature points
  const auto& pts = reg.points();
  const int np = pts.size();
  Vector wg(np);
  for (int i = 0; i < np; ++i) wg(i) = pts.w(i) * map_jacobian(reg.space(), a, pts.X[i]).second;
  double nrm2 = 0.0;
  for (int d = 0; d < D; ++d) nrm2 += v.col(d).dot(wg.cwiseProduct(v.col(d)));
  if (!(nrm2 > 0.0)) throw UndefinedRatio("best-fit error of a zero field");
  const Eigen::Index N = Z.cols();
  if (N == 0) return 1.0;
  // mode values at the points, stacked over components
  Matrix Zq(static_cast<Eigen::Index>(np) * D, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (int d = 0; d < D; ++d) {
      const Matrix q = quadrature_values(mesh, Z.col(j), d);  // nq x ne
      Zq.col(j).segment(static_cast<Eigen::Index>(d) * np, np) = Eigen::Map<const Vector>(q.data(), np);
    }
  Vector vs(static_cast<Eigen::Index>(np) * D), ws(static_cast<Eigen::Index>(np) * D);
  for (int d = 0; d < D; ++d) {
    vs.segment(static_cast<Eigen::Index>(d) * np, np) = v.col(d);
    ws.segment(static_cast<Eigen::Index>(d) * np, np) = wg;
  }
  const Matrix G = Zq.transpose() * ws.asDiagonal() * Zq;
  const Vector c = G.ldlt().solve(Zq.transpose() * ws.cwiseProduct(vs));
  const Vector r = vs - Zq * c;
  return std::sqrt(std::max(0.0, r.dot(ws.cwiseProduct(r))) / nrm2);
}

}  // namespace strobe
