#pragma once

#include "strobe/dg.hpp"
#include "strobe/geometry_maps.hpp"
#include "strobe/models.hpp"

#include <memory>
#include <vector>

namespace strobe {

/// Mapped geometric factors at every volume and edge quadrature point of a set
/// of elements. Elements outside the set have slot -1.
struct MapGeometry {
  std::vector<int> slot;  // element -> position in the covered set
  int nq = 0, nqe = 0;
  // volume point (s, q) at s * nq + q
  std::vector<Mat2> A;      // g G^{-T}
  std::vector<double> det;  // g
  std::vector<double> x;    // physical abscissa Phi_1(X)
  // edge point (s, e, q) at (s * 3 + e) * nqe + q
  std::vector<double> scale;  // || g G^{-T} N ||
  std::vector<Vec2> normal;   // unit normal in the physical configuration
  std::vector<Vec2> xf;       // Phi(X)

  bool covers(int k) const { return k >= 0 && k < static_cast<int>(slot.size()) && slot[k] >= 0; }
  double min_det() const;
};

/// Identity geometry on a set of elements (all when empty).
MapGeometry identity_geometry(const SpaceTimeMesh& mesh, const std::vector<int>& elements = {});

/// Displacement modes (columns of W, coefficients in the full map space) tabulated
/// at the quadrature points of an element set, so Phi = id + sum_m c_m W_m is cheap.
class GeometryBasis {
 public:
  GeometryBasis(const SpaceTimeMesh& mesh, const MapSpace& space, const Matrix& W,
                const std::vector<int>& elements = {});
  int num_modes() const { return static_cast<int>(modes_); }
  /// Throws DegenerateMap if g <= 0 at any covered point.
  MapGeometry geometry(const Vector& c) const;
  const std::vector<int>& elements() const { return elements_; }

 private:
  const SpaceTimeMesh& mesh_;
  std::vector<int> elements_;
  Eigen::Index modes_;
  // per point: rows = [phi1, phi2, G11, G12, G21, G22], cols = modes
  std::vector<Eigen::Matrix<double, 6, Eigen::Dynamic>> vol_, face_;
  std::vector<Vec2> vol_X_, face_X_, face_N_;
};

/// Receives element contributions in element-local ordering: entry (d, i) of
/// element e sits at position d * n_lp + i.
class AssemblySink {
 public:
  virtual ~AssemblySink() = default;
  /// Called before the contributions of element k are emitted.
  virtual void begin_element(int /*k*/) {}
  virtual void add_residual(int e, const Vector& r) = 0;
  virtual void add_jacobian(int row_e, int col_e, const Matrix& B) = 0;
};

/// Accumulates the global residual and sparse Jacobian.
class GlobalSink : public AssemblySink {
 public:
  GlobalSink(const SpaceTimeMesh& mesh, int D, bool with_jacobian);
  void add_residual(int e, const Vector& r) override;
  void add_jacobian(int row_e, int col_e, const Matrix& B) override;
  Vector residual;
  SparseMatrix jacobian() const;
  Triplets triplets;

 private:
  const SpaceTimeMesh& mesh_;
  int D_;
};

struct AssemblyOptions {
  const MapGeometry* geometry = nullptr;     // identity when null
  const std::vector<int>* elements = nullptr;  // all elements when null
  const Vector* weights = nullptr;           // per element (indexed by element id), 1 when null
  const Vector* viscosity = nullptr;         // frozen per-element viscosity, computed from w when null
  bool jacobian = true;
  // add d eps / d w to the Jacobian (eps itself still taken from `viscosity` when set)
  bool viscosity_derivative = false;
};

/// Space-time DG residual R(w, v) = sum_k rho_k (r_k^c + r_k^d) of a conservation
/// law for parameter mu, in the configuration given by a map geometry.
class Assembler {
 public:
  Assembler(ModelPtr law, std::shared_ptr<const SpaceTimeMesh> mesh);

  const ConservationLaw& law() const { return *law_; }
  const ModelPtr& law_ptr() const { return law_; }
  const SpaceTimeMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const SpaceTimeMesh>& mesh_ptr() const { return mesh_; }
  const DiffusionOperator& diffusion() const { return diffusion_; }
  int dim() const { return law_->dim(); }
  Eigen::Index size() const { return hf_size(*mesh_, law_->dim()); }

  void set_parameter(const Vector& mu) { mu_ = mu; }
  const Vector& parameter() const { return mu_; }

  /// Per-element viscosity for the elements (all when null).
  Vector viscosity(const Vector& w, const std::vector<int>* elements = nullptr) const;

  /// d eps_k / d w on element k, over the sensor component's nodal values.
  Vector viscosity_gradient(const Vector& w, int k) const;

  void assemble(const Vector& w, AssemblySink& sink, const AssemblyOptions& opts) const;

  Vector residual(const Vector& w, const AssemblyOptions& opts = {}) const;
  void residual_and_jacobian(const Vector& w, Vector& R, SparseMatrix& J, AssemblyOptions opts = {}) const;

  /// Elements in the set plus their facet neighbours, sorted.
  std::vector<int> halo(const std::vector<int>& elements) const;

 private:
  ModelPtr law_;
  std::shared_ptr<const SpaceTimeMesh> mesh_;
  DiffusionOperator diffusion_;
  Vector mu_;
  MapGeometry identity_;
};

}  // namespace strobe
