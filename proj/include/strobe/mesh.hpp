#pragma once

#include "strobe/common.hpp"
#include "strobe/reference_element.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace strobe {

enum class BoundarySide : int { None = -1, Bottom = 0, Right = 1, Top = 2, Left = 3 };

struct Facet {
  std::array<int, 2> elem{-1, -1};        // elem[1] == -1 on the boundary
  std::array<int, 2> local_edge{-1, -1};
  BoundarySide side = BoundarySide::None;
  Vec2 normal = Vec2::Zero();             // unit, outward from elem[0]
  double length = 0.0;
  Vec2 a = Vec2::Zero(), b = Vec2::Zero();  // endpoints, oriented along elem[0]'s edge

  bool is_boundary() const { return elem[1] < 0; }
};

struct ElementGeometry {
  std::array<Vec2, 3> vertices;
  Mat2 jacobian;          // columns v1 - v0, v2 - v0
  Mat2 inverse_jacobian;
  double det = 0.0;       // twice the element area
  double area() const { return 0.5 * det; }
};

/// Triangulation of the space-time rectangle (0,L) x (0,T) with a DG node layout
/// (n_lp nodes per element, duplicated across elements). Immutable once built.
class SpaceTimeMesh {
 public:
  SpaceTimeMesh(double L, double T, int nx, int nt, int p);

  double length() const { return L_; }
  double final_time() const { return T_; }
  int nx() const { return nx_; }
  int nt() const { return nt_; }
  int order() const { return ref_.order(); }
  double hx() const { return L_ / nx_; }
  double ht() const { return T_ / nt_; }
  double area() const { return L_ * T_; }

  const ReferenceTriangle& reference() const { return ref_; }
  int num_elements() const { return static_cast<int>(geometry_.size()); }
  int nodes_per_element() const { return ref_.num_nodes(); }
  int num_nodes() const { return num_elements() * nodes_per_element(); }
  int num_facets() const { return static_cast<int>(facets_.size()); }

  const ElementGeometry& element(int k) const { return geometry_[k]; }
  const std::array<int, 3>& element_vertices(int k) const { return connectivity_[k]; }
  const std::array<int, 3>& element_facets(int k) const { return element_facets_[k]; }
  /// Neighbor across local edge e of element k, or -1 on the boundary.
  int neighbor(int k, int e) const;
  const Facet& facet(int f) const;
  const std::vector<Facet>& facets() const { return facets_; }

  /// DG node positions, node (i, k) at index i + k * n_lp.
  const std::vector<Vec2>& nodes() const { return nodes_; }

  /// Maps a physical point to the containing element; ties go to the lower index.
  /// Points must be inside the closed rectangle (see clamp_to_domain).
  int locate(const Vec2& x) const;
  /// Reference coordinates of x with respect to element k (affine inverse).
  Vec2 to_reference(int k, const Vec2& x) const;
  Vec2 to_physical(int k, const Vec2& xi) const;

  /// Moves x into the closed rectangle. Returns true if it was outside by more than tol.
  bool clamp_to_domain(Vec2& x, double tol = 1e-10) const;

  /// Lattice coordinates of a DG node on the (nx p + 1) x (nt p + 1) node grid.
  std::array<int, 2> lattice_index(int node) const;
  int lattice_nx() const { return nx_ * order() + 1; }
  int lattice_nt() const { return nt_ * order() + 1; }

  /// Stable 64-bit hash of extents, resolution, order and connectivity.
  std::uint64_t hash() const;

 private:
  double L_, T_;
  int nx_, nt_;
  ReferenceTriangle ref_;
  std::vector<std::array<int, 3>> connectivity_;
  std::vector<ElementGeometry> geometry_;
  std::vector<std::array<int, 3>> element_facets_;
  std::vector<Facet> facets_;
  std::vector<Vec2> nodes_;
  std::vector<std::array<int, 2>> lattice_;
};

/// Convenience constructor with argument validation.
std::shared_ptr<const SpaceTimeMesh> build_structured_mesh(double L, double T, int nx, int nt, int p = 2);

/// Same connectivity as the base mesh, node positions rewritten by a map.
struct DeformedMesh {
  std::shared_ptr<const SpaceTimeMesh> base;
  std::vector<Vec2> nodes;
};

/// Outward unit normal and length of a facet (normal is outward from elem[0]).
std::pair<Vec2, double> facet_normal_and_length(const SpaceTimeMesh& mesh, int facet_id);

}  // namespace strobe
