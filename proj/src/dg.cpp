#include "strobe/dg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace strobe {

DGField DGField::zeros(std::shared_ptr<const SpaceTimeMesh> mesh, int D) {
  DGField f;
  f.coeffs = Vector::Zero(hf_size(*mesh, D));
  f.mesh = std::move(mesh);
  f.D = D;
  return f;
}

double DGField::value(int d, int k, const Vec2& xi) const {
  const int nlp = mesh->nodes_per_element();
  const Vector phi = mesh->reference().values(xi);
  return phi.dot(coeffs.segment(dof_index(*mesh, 0, k, d), nlp));
}

double DGField::value_at(int d, const Vec2& x) const {
  const int k = mesh->locate(x);
  return value(d, k, mesh->to_reference(k, x));
}

namespace {

// Physical normal derivatives of the basis at the edge points (rows) of local edge e.
Matrix normal_derivatives(const SpaceTimeMesh& mesh, int k, int e, const Vec2& N, bool reversed) {
  const auto& ref = mesh.reference();
  const Mat2& Ji = mesh.element(k).inverse_jacobian;
  // grad_x phi = Ji^T grad_xi phi, so grad_x phi . N = grad_xi phi . (Ji N).
  const Vec2 m = Ji * N;
  Matrix G = m.x() * ref.edge_dxi(e) + m.y() * ref.edge_deta(e);
  if (reversed) G = G.colwise().reverse().eval();
  return G;
}

Matrix edge_values(const SpaceTimeMesh& mesh, int e, bool reversed) {
  Matrix V = mesh.reference().edge_values(e);
  if (reversed) V = V.colwise().reverse().eval();
  return V;
}

}  // namespace

DiffusionOperator::DiffusionOperator(const SpaceTimeMesh& mesh) : mesh_(mesh) {
  const auto& ref = mesh.reference();
  const int ne = mesh.num_elements();
  const int n = ref.num_nodes();
  const Eigen::Map<const Vector> wv(ref.volume_rule().weights.data(), ref.volume_rule().size());
  const Matrix ref_mass_inv = ref.mass().inverse();

  stiffness_.resize(ne);
  mass_.resize(ne);
  inverse_mass_.resize(ne);
  for (int k = 0; k < ne; ++k) {
    const auto& geo = mesh.element(k);
    const Mat2& Ji = geo.inverse_jacobian;
    const Matrix dx = Ji(0, 0) * ref.volume_dxi() + Ji(1, 0) * ref.volume_deta();
    const Matrix dt = Ji(0, 1) * ref.volume_dxi() + Ji(1, 1) * ref.volume_deta();
    const Vector w = wv * geo.det;
    stiffness_[k] = dx.transpose() * w.asDiagonal() * dx + dt.transpose() * w.asDiagonal() * dt;
    mass_[k] = geo.det * ref.mass();
    inverse_mass_[k] = ref_mass_inv / geo.det;
  }

  const auto& er = ref.edge_rule();
  const Eigen::Map<const Vector> we(er.weights.data(), er.size());
  const int nf = mesh.num_facets();
  interior_.resize(nf);
  boundary_matrix_.resize(nf);
  boundary_data_.resize(nf);
  const double eta = kPenalty;
  for (int f = 0; f < nf; ++f) {
    const Facet& fc = mesh.facet(f);
    const Vector W = we * fc.length;
    const int a = fc.elem[0];
    const Matrix Va = edge_values(mesh, fc.local_edge[0], false);
    const Matrix Ga = normal_derivatives(mesh, a, fc.local_edge[0], fc.normal, false);
    if (fc.is_boundary()) {
      const Matrix VtW = Va.transpose() * W.asDiagonal();
      const Matrix lift = VtW * Va * inverse_mass_[a] * VtW;
      boundary_matrix_[f] = -VtW * Ga - Ga.transpose() * W.asDiagonal() * Va + eta * lift * Va;
      boundary_data_[f] = Ga.transpose() * W.asDiagonal() - eta * lift;
      continue;
    }
    const int b = fc.elem[1];
    const Matrix Vb = edge_values(mesh, fc.local_edge[1], true);
    const Matrix Gb = normal_derivatives(mesh, b, fc.local_edge[1], fc.normal, true);
    const Eigen::Index nq = Va.rows();
    Matrix jump(nq, 2 * n);
    jump << Va, -Vb;
    Matrix avg_a = Matrix::Zero(nq, 2 * n);
    Matrix avg_b = Matrix::Zero(nq, 2 * n);
    avg_a.leftCols(n) = 0.5 * Ga;
    avg_b.rightCols(n) = 0.5 * Gb;
    const Matrix JtW = jump.transpose() * W.asDiagonal();
    const Matrix lift_a = JtW * Va * inverse_mass_[a] * Va.transpose() * W.asDiagonal() * jump;
    const Matrix lift_b = JtW * Vb * inverse_mass_[b] * Vb.transpose() * W.asDiagonal() * jump;
    interior_[f][0] = -JtW * avg_a - avg_a.transpose() * W.asDiagonal() * jump + 0.25 * eta * lift_a;
    interior_[f][1] = -JtW * avg_b - avg_b.transpose() * W.asDiagonal() * jump + 0.25 * eta * lift_b;
  }
}

NormPair assemble_norms(const SpaceTimeMesh& mesh, int D) {
  const DiffusionOperator op(mesh);
  const int n = mesh.nodes_per_element();
  const int ne = mesh.num_elements();
  Triplets tx, ty;
  auto block = [](Triplets& t, Eigen::Index r0, Eigen::Index c0, const Matrix& B) {
    for (Eigen::Index i = 0; i < B.rows(); ++i) {
      for (Eigen::Index j = 0; j < B.cols(); ++j) {
        if (B(i, j) != 0.0) t.emplace_back(r0 + i, c0 + j, B(i, j));
      }
    }
  };
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < ne; ++k) {
      const Eigen::Index r = dof_index(mesh, 0, k, d);
      block(tx, r, r, op.mass(k));
      block(ty, r, r, op.mass(k) + op.stiffness(k));
    }
    for (int f = 0; f < mesh.num_facets(); ++f) {
      const Facet& fc = mesh.facet(f);
      if (fc.is_boundary()) continue;
      const Matrix T = op.interior_part(f, 0) + op.interior_part(f, 1);
      const Eigen::Index ra = dof_index(mesh, 0, fc.elem[0], d);
      const Eigen::Index rb = dof_index(mesh, 0, fc.elem[1], d);
      block(ty, ra, ra, T.topLeftCorner(n, n));
      block(ty, ra, rb, T.topRightCorner(n, n));
      block(ty, rb, ra, T.bottomLeftCorner(n, n));
      block(ty, rb, rb, T.bottomRightCorner(n, n));
    }
  }
  const Eigen::Index N = hf_size(mesh, D);
  NormPair out;
  out.X.resize(N, N);
  out.Y.resize(N, N);
  out.X.setFromTriplets(tx.begin(), tx.end());
  out.Y.setFromTriplets(ty.begin(), ty.end());
  // Symmetrize round-off.
  SparseMatrix Yt = out.Y.transpose();
  out.Y = 0.5 * (out.Y + Yt);
  return out;
}

RieszSolver::RieszSolver(const SparseMatrix& Y) : Y_(Y) {
  llt_.compute(Y_);
  if (llt_.info() != Eigen::Success) throw FactorizationFailure("Cholesky factorization of the norm matrix failed");
}

Vector RieszSolver::solve(const Vector& F) const {
  if (F.size() != Y_.rows()) throw InvalidArgument("riesz: functional has wrong length");
  return llt_.solve(F);
}

Matrix RieszSolver::solve(const Matrix& F) const {
  if (F.rows() != Y_.rows()) throw InvalidArgument("riesz: functional has wrong length");
  return llt_.solve(F);
}

Matrix RieszSolver::whiten(const Matrix& F) const {
  if (F.rows() != Y_.rows()) throw InvalidArgument("riesz: functional has wrong length");
  const Matrix PF = llt_.permutationP() * F;
  return llt_.matrixL().solve(PF);
}

int pod_cardinality(const Vector& eigenvalues, double tol) {
  if (!(tol > 0.0 && tol < 1.0)) throw InvalidArgument("pod tolerance must lie in (0,1)");
  const double total = eigenvalues.sum();
  if (total <= 0.0) return 0;
  double acc = 0.0;
  for (Eigen::Index n = 0; n < eigenvalues.size(); ++n) {
    acc += eigenvalues(n);
    if (acc >= (1.0 - tol) * total) return static_cast<int>(n + 1);
  }
  return static_cast<int>(eigenvalues.size());
}

PODResult pod(const Matrix& snapshots, double tol, const SparseMatrix* inner, int max_modes) {
  if (snapshots.cols() == 0) throw InvalidArgument("pod: empty snapshot set");
  const Matrix XS = inner ? Matrix(*inner * snapshots) : snapshots;
  Matrix C = snapshots.transpose() * XS;
  C = 0.5 * (C + C.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(C);
  const Eigen::Index n = C.rows();
  PODResult out;
  out.eigenvalues.resize(n);
  Matrix V(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.eigenvalues(i) = std::max(0.0, eig.eigenvalues()(n - 1 - i));
    V.col(i) = eig.eigenvectors().col(n - 1 - i);
  }
  int N = max_modes > 0 ? static_cast<int>(std::min<Eigen::Index>(max_modes, n)) : pod_cardinality(out.eigenvalues, tol);
  // Modes attached to round-off eigenvalues cannot be normalized.
  const double floor = 1e-14 * std::max(out.eigenvalues(0), 1e-300);
  while (N > 0 && out.eigenvalues(N - 1) <= floor) --N;
  out.N = N;
  out.modes.resize(snapshots.rows(), N);
  for (int i = 0; i < N; ++i) out.modes.col(i) = snapshots * V.col(i) / std::sqrt(out.eigenvalues(i));
  // One pass of modified Gram-Schmidt restores orthonormality lost in the Gramian.
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < i; ++j) {
      const Vector Xz = inner ? Vector(*inner * out.modes.col(j)) : Vector(out.modes.col(j));
      out.modes.col(i) -= out.modes.col(i).dot(Xz) * out.modes.col(j);
    }
    const Vector Xz = inner ? Vector(*inner * out.modes.col(i)) : Vector(out.modes.col(i));
    out.modes.col(i) /= std::sqrt(out.modes.col(i).dot(Xz));
  }
  const Matrix XZ = inner ? Matrix(*inner * out.modes) : out.modes;
  out.coefficients = XZ.transpose() * snapshots;
  return out;
}

double best_fit_error(const Vector& U, const Matrix& Z, const SparseMatrix& X) {
  const Vector XU = X * U;
  const double nrm2 = U.dot(XU);
  if (!(nrm2 > 0.0)) throw UndefinedRatio("best-fit error of a zero field");
  if (Z.cols() == 0) return 1.0;
  const Vector alpha = Z.transpose() * XU;
  const Vector e = U - Z * alpha;
  return std::sqrt(std::max(0.0, e.dot(X * e)) / nrm2);
}

Vector to_continuous(const SpaceTimeMesh& mesh, int D, const Vector& coeffs) {
  const int nn = mesh.num_nodes();
  const int lx = mesh.lattice_nx();
  const int nl = lx * mesh.lattice_nt();
  Vector out(coeffs.size());
  std::vector<double> sum(nl);
  std::vector<int> count(nl, 0);
  for (int i = 0; i < nn; ++i) {
    const auto [a, b] = mesh.lattice_index(i);
    ++count[b * lx + a];
  }
  for (int d = 0; d < D; ++d) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int i = 0; i < nn; ++i) {
      const auto [a, b] = mesh.lattice_index(i);
      sum[b * lx + a] += coeffs(static_cast<Eigen::Index>(d) * nn + i);
    }
    for (int i = 0; i < nn; ++i) {
      const auto [a, b] = mesh.lattice_index(i);
      const int l = b * lx + a;
      out(static_cast<Eigen::Index>(d) * nn + i) = sum[l] / count[l];
    }
  }
  return out;
}

Vector project_quadrature_values(const SpaceTimeMesh& mesh, const Matrix& values) {
  const auto& ref = mesh.reference();
  const Eigen::Map<const Vector> w(ref.volume_rule().weights.data(), ref.volume_rule().size());
  // The element Jacobian is constant, so the reference projector applies unchanged.
  const Matrix P = ref.mass().ldlt().solve(ref.volume_values().transpose() * w.asDiagonal());
  const int n = mesh.nodes_per_element();
  const int ne = mesh.num_elements();
  const int D = static_cast<int>(values.cols() / ne);
  Vector out(hf_size(mesh, D));
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < ne; ++k) out.segment(dof_index(mesh, 0, k, d), n) = P * values.col(d * ne + k);
  }
  return out;
}

Matrix quadrature_values(const SpaceTimeMesh& mesh, const Vector& coeffs, int d) {
  const int n = mesh.nodes_per_element();
  const int ne = mesh.num_elements();
  const Eigen::Map<const Matrix> U(coeffs.data() + dof_index(mesh, 0, 0, d), n, ne);
  return mesh.reference().volume_values() * U;
}

Vector interpolate(const SpaceTimeMesh& mesh, int D, const std::function<State(const Vec2&)>& f) {
  const int nn = mesh.num_nodes();
  Vector out(hf_size(mesh, D));
  const auto& nodes = mesh.nodes();
  for (int i = 0; i < nn; ++i) {
    const State u = f(nodes[i]);
    for (int d = 0; d < D; ++d) out(static_cast<Eigen::Index>(d) * nn + i) = u(d);
  }
  return out;
}

}  // namespace strobe
