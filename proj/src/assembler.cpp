#include "strobe/assembler.hpp"

#include <algorithm>
#include <cmath>

namespace strobe {

namespace {

Vec2 outward_normal(const SpaceTimeMesh& mesh, int k, int e) {
  const Facet& f = mesh.facet(mesh.element_facets(k)[e]);
  return f.elem[0] == k ? f.normal : Vec2(-f.normal);
}

std::vector<int> all_elements(const SpaceTimeMesh& mesh) {
  std::vector<int> e(mesh.num_elements());
  for (int k = 0; k < mesh.num_elements(); ++k) e[k] = k;
  return e;
}

void fill_point(MapGeometry& geo, std::size_t vi, const Mat2& G, const Vec2& X, const Vec2& phi) {
  const double g = G.determinant();
  if (!(g > 0.0)) throw DegenerateMap("map Jacobian determinant is not positive at a quadrature point");
  geo.A[vi] = g * G.inverse().transpose();
  geo.det[vi] = g;
  geo.x[vi] = X.x() + phi.x();
}

void fill_face(MapGeometry& geo, std::size_t fi, const Mat2& G, const Vec2& X, const Vec2& phi, const Vec2& N) {
  const double g = G.determinant();
  if (!(g > 0.0)) throw DegenerateMap("map Jacobian determinant is not positive at an edge point");
  const Vec2 m = G.inverse().transpose() * N;
  const double nm = m.norm();
  geo.scale[fi] = g * nm;
  geo.normal[fi] = m / nm;
  geo.xf[fi] = X + phi;
}

void resize_geometry(MapGeometry& geo, const SpaceTimeMesh& mesh, const std::vector<int>& elements) {
  const auto& ref = mesh.reference();
  geo.nq = static_cast<int>(ref.volume_rule().size());
  geo.nqe = static_cast<int>(ref.edge_rule().size());
  geo.slot.assign(mesh.num_elements(), -1);
  for (std::size_t s = 0; s < elements.size(); ++s) geo.slot[elements[s]] = static_cast<int>(s);
  const std::size_t nv = elements.size() * geo.nq, nf = elements.size() * 3 * geo.nqe;
  geo.A.resize(nv);
  geo.det.resize(nv);
  geo.x.resize(nv);
  geo.scale.resize(nf);
  geo.normal.resize(nf);
  geo.xf.resize(nf);
}

}  // namespace

double MapGeometry::min_det() const {
  return det.empty() ? 1.0 : *std::min_element(det.begin(), det.end());
}

MapGeometry identity_geometry(const SpaceTimeMesh& mesh, const std::vector<int>& elements_in) {
  const std::vector<int> elements = elements_in.empty() ? all_elements(mesh) : elements_in;
  MapGeometry geo;
  resize_geometry(geo, mesh, elements);
  const auto& ref = mesh.reference();
  for (std::size_t s = 0; s < elements.size(); ++s) {
    const int k = elements[s];
    for (int q = 0; q < geo.nq; ++q) {
      const Vec2 X = mesh.to_physical(k, ref.volume_rule().points[q]);
      fill_point(geo, s * geo.nq + q, Mat2::Identity(), X, Vec2::Zero());
    }
    for (int e = 0; e < 3; ++e) {
      const Vec2 N = outward_normal(mesh, k, e);
      for (int q = 0; q < geo.nqe; ++q) {
        const Vec2 X = mesh.to_physical(k, ReferenceTriangle::edge_point(e, ref.edge_rule().points[q].x()));
        fill_face(geo, (s * 3 + e) * geo.nqe + q, Mat2::Identity(), X, Vec2::Zero(), N);
      }
    }
  }
  return geo;
}

GeometryBasis::GeometryBasis(const SpaceTimeMesh& mesh, const MapSpace& space, const Matrix& W,
                             const std::vector<int>& elements)
    : mesh_(mesh), elements_(elements.empty() ? all_elements(mesh) : elements), modes_(W.cols()) {
  if (W.rows() != space.size()) throw InvalidArgument("geometry basis: mode coefficients do not match the map space");
  const auto& ref = mesh.reference();
  const int nq = static_cast<int>(ref.volume_rule().size());
  const int nqe = static_cast<int>(ref.edge_rule().size());
  const std::size_t ns = elements_.size();
  vol_.resize(ns * nq);
  face_.resize(ns * 3 * nqe);
  vol_X_.resize(vol_.size());
  face_X_.resize(face_.size());
  face_N_.resize(face_.size());
  const int nm = space.size();
  const int half = nm / 2;
  auto tabulate = [&](const Vec2& X, Eigen::Matrix<double, 6, Eigen::Dynamic>& out) {
    std::vector<double> v(nm), dx(nm), dt(nm);
    space.modes_at(X, v.data(), dx.data(), dt.data());
    const Eigen::Map<const Vector> V(v.data(), nm), DX(dx.data(), nm), DT(dt.data(), nm);
    out.resize(6, modes_);
    out.row(0) = V.head(half).transpose() * W.topRows(half);
    out.row(1) = V.tail(half).transpose() * W.bottomRows(half);
    out.row(2) = DX.head(half).transpose() * W.topRows(half);
    out.row(3) = DT.head(half).transpose() * W.topRows(half);
    out.row(4) = DX.tail(half).transpose() * W.bottomRows(half);
    out.row(5) = DT.tail(half).transpose() * W.bottomRows(half);
  };
  parallel_for(ns, [&](std::size_t s) {
    const int k = elements_[s];
    for (int q = 0; q < nq; ++q) {
      const Vec2 X = mesh.to_physical(k, ref.volume_rule().points[q]);
      vol_X_[s * nq + q] = X;
      tabulate(X, vol_[s * nq + q]);
    }
    for (int e = 0; e < 3; ++e) {
      const Vec2 N = outward_normal(mesh, k, e);
      for (int q = 0; q < nqe; ++q) {
        const std::size_t fi = (s * 3 + e) * nqe + q;
        const Vec2 X = mesh.to_physical(k, ReferenceTriangle::edge_point(e, ref.edge_rule().points[q].x()));
        face_X_[fi] = X;
        face_N_[fi] = N;
        tabulate(X, face_[fi]);
      }
    }
  });
}

MapGeometry GeometryBasis::geometry(const Vector& c) const {
  if (c.size() != modes_) throw InvalidArgument("geometry basis: wrong number of map coefficients");
  MapGeometry geo;
  resize_geometry(geo, mesh_, elements_);
  auto eval = [&](const Eigen::Matrix<double, 6, Eigen::Dynamic>& T, Vec2& phi, Mat2& G) {
    const Eigen::Matrix<double, 6, 1> v = modes_ > 0 ? Eigen::Matrix<double, 6, 1>(T * c)
                                                     : Eigen::Matrix<double, 6, 1>::Zero();
    phi << v(0), v(1);
    G << 1.0 + v(2), v(3), v(4), 1.0 + v(5);
  };
  Vec2 phi;
  Mat2 G;
  for (std::size_t i = 0; i < vol_.size(); ++i) {
    eval(vol_[i], phi, G);
    fill_point(geo, i, G, vol_X_[i], phi);
  }
  for (std::size_t i = 0; i < face_.size(); ++i) {
    eval(face_[i], phi, G);
    fill_face(geo, i, G, face_X_[i], phi, face_N_[i]);
  }
  return geo;
}

// ---------------------------------------------------------------- sinks

GlobalSink::GlobalSink(const SpaceTimeMesh& mesh, int D, bool) : residual(Vector::Zero(hf_size(mesh, D))), mesh_(mesh), D_(D) {}

void GlobalSink::add_residual(int e, const Vector& r) {
  const int n = mesh_.nodes_per_element();
  for (int d = 0; d < D_; ++d) residual.segment(dof_index(mesh_, 0, e, d), n) += r.segment(d * n, n);
}

void GlobalSink::add_jacobian(int re, int ce, const Matrix& B) {
  const int n = mesh_.nodes_per_element();
  for (int d = 0; d < D_; ++d) {
    const Eigen::Index r0 = dof_index(mesh_, 0, re, d);
    for (int c = 0; c < D_; ++c) {
      const Eigen::Index c0 = dof_index(mesh_, 0, ce, c);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double v = B(d * n + i, c * n + j);
          if (v != 0.0) triplets.emplace_back(r0 + i, c0 + j, v);
        }
    }
  }
}

SparseMatrix GlobalSink::jacobian() const {
  const Eigen::Index N = hf_size(mesh_, D_);
  SparseMatrix J(N, N);
  J.setFromTriplets(triplets.begin(), triplets.end());
  return J;
}

// ---------------------------------------------------------------- assembler

Assembler::Assembler(ModelPtr law, std::shared_ptr<const SpaceTimeMesh> mesh)
    : law_(std::move(law)), mesh_(std::move(mesh)), diffusion_(*mesh_), mu_(law_->box.centroid()),
      identity_(identity_geometry(*mesh_)) {}

Vector Assembler::viscosity(const Vector& w, const std::vector<int>* elements) const {
  if (!elements) return artificial_viscosity(*law_, *mesh_, w);
  const auto& ref = mesh_->reference();
  const int n = ref.num_nodes();
  const int d = law_->sensor_component();
  Vector eps = Vector::Constant(mesh_->num_elements(), law_->viscosity.eps_base);
  for (int k : *elements) {
    const auto u = w.segment(dof_index(*mesh_, 0, k, d), n);
    const double den = u.dot(ref.mass() * u);
    const double num = u.dot(ref.high_mode_form() * u);
    double ramp = 0.0;
    if (den > 0.0 && num > 0.0) ramp = viscosity_ramp(0.5 * std::log10(num / den), law_->viscosity);
    eps(k) = law_->viscosity.eps_base + ramp;
  }
  return eps;
}

Vector Assembler::viscosity_gradient(const Vector& w, int k) const {
  const auto& ref = mesh_->reference();
  const int n = ref.num_nodes();
  const auto u = w.segment(dof_index(*mesh_, 0, k, law_->sensor_component()), n);
  const Vector Mu = ref.mass() * u, Qu = ref.high_mode_form() * u;
  const double den = u.dot(Mu), num = u.dot(Qu);
  if (!(den > 0.0 && num > 0.0)) return Vector::Zero(n);
  const double slope = viscosity_ramp_slope(0.5 * std::log10(num / den), law_->viscosity);
  if (slope == 0.0) return Vector::Zero(n);
  return slope / std::log(10.0) * (Qu / num - Mu / den);
}

std::vector<int> Assembler::halo(const std::vector<int>& elements) const {
  std::vector<int> out(elements);
  for (int k : elements)
    for (int e = 0; e < 3; ++e) {
      const int nb = mesh_->neighbor(k, e);
      if (nb >= 0) out.push_back(nb);
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

struct Contribution {
  std::vector<std::pair<int, Vector>> residual;
  std::vector<std::tuple<int, int, Matrix>> jacobian;

  Vector& res(int e, Eigen::Index size) {
    for (auto& r : residual)
      if (r.first == e) return r.second;
    residual.emplace_back(e, Vector::Zero(size));
    return residual.back().second;
  }
  Matrix& jac(int re, int ce, Eigen::Index size) {
    for (auto& [a, b, B] : jacobian)
      if (a == re && b == ce) return B;
    jacobian.emplace_back(re, ce, Matrix::Zero(size, size));
    return std::get<2>(jacobian.back());
  }
};

}  // namespace

void Assembler::assemble(const Vector& w, AssemblySink& sink, const AssemblyOptions& opts) const {
  const SpaceTimeMesh& mesh = *mesh_;
  const auto& ref = mesh.reference();
  const ConservationLaw& law = *law_;
  const int D = law.dim();
  const int n = ref.num_nodes();
  const int Dn = D * n;
  const MapGeometry& geo = opts.geometry ? *opts.geometry : identity_;
  const std::vector<int> all = opts.elements ? std::vector<int>{} : all_elements(mesh);
  const std::vector<int>& elements = opts.elements ? *opts.elements : all;

  Vector eps_local;
  const Vector* eps = opts.viscosity;
  if (!eps) {
    if (opts.elements) {
      const auto h = halo(elements);
      eps_local = viscosity(w, &h);
    } else {
      eps_local = viscosity(w);
    }
    eps = &eps_local;
  }

  const int nq = static_cast<int>(ref.volume_rule().size());
  const int nqe = static_cast<int>(ref.edge_rule().size());
  const auto& vw = ref.volume_rule().weights;
  const auto& ew = ref.edge_rule().weights;
  const bool jac = opts.jacobian;

  auto element_state = [&](int k) {
    Matrix Wk(D, n);
    for (int d = 0; d < D; ++d) Wk.row(d) = w.segment(dof_index(mesh, 0, k, d), n).transpose();
    return Wk;
  };

  std::vector<Contribution> contrib(elements.size());
  parallel_for(elements.size(), [&](std::size_t idx) {
    const int k = elements[idx];
    if (!geo.covers(k)) throw InvalidArgument("assembler: geometry does not cover a requested element");
    const int s = geo.slot[k];
    Contribution& C = contrib[idx];
    // references into these stay valid: at most 4 element rows and 10 blocks
    C.residual.reserve(4);
    C.jacobian.reserve(10);
    Vector& rk = C.res(k, Dn);
    Matrix* Bkk = jac ? &C.jac(k, k, Dn) : nullptr;
    const auto& eg = mesh.element(k);
    const Mat2& Ji = eg.inverse_jacobian;
    const Matrix Wk = element_state(k);

    // Volume terms.
    for (int q = 0; q < nq; ++q) {
      const Vector phi = ref.volume_values().row(q).transpose();
      const Vector dX = Ji(0, 0) * ref.volume_dxi().row(q).transpose() + Ji(1, 0) * ref.volume_deta().row(q).transpose();
      const Vector dT = Ji(0, 1) * ref.volume_dxi().row(q).transpose() + Ji(1, 1) * ref.volume_deta().row(q).transpose();
      const State U = Wk * phi;
      const std::size_t gi = static_cast<std::size_t>(s) * nq + q;
      const Mat2& A = geo.A[gi];
      const double g = geo.det[gi];
      const double wq = vw[q] * eg.det;
      const SpaceTimeFlux F = spacetime_flux(law, U) * A;
      const bool src = law.has_source();
      const State S = src ? State(g * law.source(U, geo.x[gi])) : State::Zero(D);
      for (int d = 0; d < D; ++d) rk.segment(d * n, n) -= wq * (dX * F(d, 0) + dT * F(d, 1) + phi * S(d));
      if (jac) {
        const StateMatrix fJ = law.flux_jacobian(U);
        const StateMatrix sJ = src ? StateMatrix(g * law.source_jacobian(U, geo.x[gi])) : StateMatrix::Zero(D, D);
        for (int d = 0; d < D; ++d)
          for (int c = 0; c < D; ++c) {
            const double t0 = fJ(d, c) * A(0, 0) + (d == c ? A(1, 0) : 0.0);
            const double t1 = fJ(d, c) * A(0, 1) + (d == c ? A(1, 1) : 0.0);
            Bkk->block(d * n, c * n, n, n).noalias() -= wq * (t0 * dX + t1 * dT + sJ(d, c) * phi) * phi.transpose();
          }
      }
    }

    // Convective edge terms.
    for (int e = 0; e < 3; ++e) {
      const int f = mesh.element_facets(k)[e];
      const Facet& fc = mesh.facet(f);
      const int nb = mesh.neighbor(k, e);
      const Matrix& Vk = ref.edge_values(e);
      Matrix Vn;
      Matrix Wn;
      if (nb >= 0) {
        const int enb = fc.elem[0] == k ? fc.local_edge[1] : fc.local_edge[0];
        Vn = ref.edge_values(enb).colwise().reverse();
        Wn = element_state(nb);
      }
      Matrix* Bkn = (jac && nb >= 0) ? &C.jac(k, nb, Dn) : nullptr;
      StateMatrix mask = StateMatrix::Zero(D, D);
      for (int d = 0; d < D; ++d) mask(d, d) = law.is_dirichlet(fc.side, d) ? 0.0 : 1.0;
      for (int q = 0; q < nqe; ++q) {
        const std::size_t fi = (static_cast<std::size_t>(s) * 3 + e) * nqe + q;
        const Vector phi = Vk.row(q).transpose();
        const State Um = Wk * phi;
        State Up(D);
        Vector phin;
        if (nb >= 0) {
          phin = Vn.row(q).transpose();
          Up = Wn * phin;
        } else {
          const State ub = law.dirichlet_value(fc.side, geo.xf[fi], mu_);
          for (int d = 0; d < D; ++d) Up(d) = mask(d, d) > 0.0 ? Um(d) : ub(d);
        }
        const double wq = ew[q] * fc.length * geo.scale[fi];
        StateMatrix dP, dM;
        const State H = rusanov_flux(law, Up, Um, geo.normal[fi], dP, dM);
        for (int d = 0; d < D; ++d) rk.segment(d * n, n) += wq * H(d) * phi;
        if (jac) {
          const StateMatrix dMt = nb >= 0 ? dM : StateMatrix(dM + dP * mask);
          for (int d = 0; d < D; ++d)
            for (int c = 0; c < D; ++c) {
              Bkk->block(d * n, c * n, n, n).noalias() += (wq * dMt(d, c)) * phi * phi.transpose();
              if (nb >= 0) Bkn->block(d * n, c * n, n, n).noalias() += (wq * dP(d, c)) * phi * phin.transpose();
            }
        }
      }
    }

    // Diffusion: volume, half of each interior facet, Dirichlet facets.
    const double ek = (*eps)(k);
    const Matrix& K = diffusion_.stiffness(k);
    const bool dvis = jac && opts.viscosity_derivative;
    const int ds = law.sensor_component();
    auto vgrad = [&](int e) { return viscosity_gradient(w, e); };
    const Vector gk = dvis ? vgrad(k) : Vector();
    for (int d = 0; d < D; ++d) {
      rk.segment(d * n, n) += ek * K * Wk.row(d).transpose();
      if (jac) Bkk->block(d * n, d * n, n, n) += ek * K;
      if (dvis) Bkk->block(d * n, ds * n, n, n) += (K * Wk.row(d).transpose()) * gk.transpose();
    }
    for (int e = 0; e < 3; ++e) {
      const int f = mesh.element_facets(k)[e];
      const Facet& fc = mesh.facet(f);
      if (fc.is_boundary()) {
        const Matrix& Bb = diffusion_.boundary_matrix(f);
        const Matrix& Cb = diffusion_.boundary_data(f);
        for (int d = 0; d < D; ++d) {
          if (!law.is_dirichlet(fc.side, d)) continue;
          Vector gd(nqe);
          for (int q = 0; q < nqe; ++q) {
            const std::size_t fi = (static_cast<std::size_t>(s) * 3 + e) * nqe + q;
            gd(q) = law.dirichlet_value(fc.side, geo.xf[fi], mu_)(d);
          }
          const Vector bterm = Bb * Wk.row(d).transpose() + Cb * gd;
          rk.segment(d * n, n) += ek * bterm;
          if (jac) Bkk->block(d * n, d * n, n, n) += ek * Bb;
          if (dvis) Bkk->block(d * n, ds * n, n, n) += bterm * gk.transpose();
        }
        continue;
      }
      const int a = fc.elem[0], b = fc.elem[1];
      const Matrix T = 0.5 * ((*eps)(a) * diffusion_.interior_part(f, 0) + (*eps)(b) * diffusion_.interior_part(f, 1));
      const Matrix Wa = a == k ? Wk : element_state(a);
      const Matrix Wb = b == k ? Wk : element_state(b);
      Vector& ra = C.res(a, Dn);
      Vector& rb = C.res(b, Dn);
      for (int d = 0; d < D; ++d) {
        ra.segment(d * n, n) += T.topLeftCorner(n, n) * Wa.row(d).transpose() + T.topRightCorner(n, n) * Wb.row(d).transpose();
        rb.segment(d * n, n) += T.bottomLeftCorner(n, n) * Wa.row(d).transpose() + T.bottomRightCorner(n, n) * Wb.row(d).transpose();
      }
      if (jac) {
        Matrix* blocks[2][2] = {{&C.jac(a, a, Dn), &C.jac(a, b, Dn)}, {&C.jac(b, a, Dn), &C.jac(b, b, Dn)}};
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j)
            for (int d = 0; d < D; ++d) blocks[i][j]->block(d * n, d * n, n, n) += T.block(i * n, j * n, n, n);
        if (dvis) {
          // d/d eps_a of 0.5 eps_a P_a [u_a; u_b], and likewise for b
          const int side_elem[2] = {a, b};
          for (int sd = 0; sd < 2; ++sd) {
            const Matrix& P = diffusion_.interior_part(f, sd);
            const Vector g = side_elem[sd] == k ? gk : vgrad(side_elem[sd]);
            for (int i = 0; i < 2; ++i)
              for (int d = 0; d < D; ++d) {
                const Vector pu = 0.5 * (P.block(i * n, 0, n, n) * Wa.row(d).transpose() +
                                         P.block(i * n, n, n, n) * Wb.row(d).transpose());
                blocks[i][sd]->block(d * n, ds * n, n, n) += pu * g.transpose();
              }
          }
        }
      }
    }
  });

  for (std::size_t idx = 0; idx < elements.size(); ++idx) {
    const int k = elements[idx];
    const double rho = opts.weights ? (*opts.weights)(k) : 1.0;
    Contribution& C = contrib[idx];
    sink.begin_element(k);
    for (auto& [e, r] : C.residual) sink.add_residual(e, rho == 1.0 ? r : Vector(rho * r));
    if (jac)
      for (auto& [re, ce, B] : C.jacobian) sink.add_jacobian(re, ce, rho == 1.0 ? B : Matrix(rho * B));
  }
}

Vector Assembler::residual(const Vector& w, const AssemblyOptions& opts_in) const {
  AssemblyOptions opts = opts_in;
  opts.jacobian = false;
  GlobalSink sink(*mesh_, dim(), false);
  assemble(w, sink, opts);
  return sink.residual;
}

void Assembler::residual_and_jacobian(const Vector& w, Vector& R, SparseMatrix& J, AssemblyOptions opts) const {
  opts.jacobian = true;
  GlobalSink sink(*mesh_, dim(), true);
  assemble(w, sink, opts);
  R = sink.residual;
  J = sink.jacobian();
}

}  // namespace strobe
