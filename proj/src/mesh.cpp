#include "strobe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

namespace strobe {

namespace {

BoundarySide classify(const Vec2& a, const Vec2& b, double L, double T) {
  const double tol = 1e-12 * std::max(L, T);
  if (std::abs(a.y()) < tol && std::abs(b.y()) < tol) return BoundarySide::Bottom;
  if (std::abs(a.y() - T) < tol && std::abs(b.y() - T) < tol) return BoundarySide::Top;
  if (std::abs(a.x()) < tol && std::abs(b.x()) < tol) return BoundarySide::Left;
  if (std::abs(a.x() - L) < tol && std::abs(b.x() - L) < tol) return BoundarySide::Right;
  return BoundarySide::None;
}

void fnv_mix(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

SpaceTimeMesh::SpaceTimeMesh(double L, double T, int nx, int nt, int p)
    : L_(L), T_(T), nx_(nx), nt_(nt), ref_(p) {
  if (!(L > 0.0) || !(T > 0.0)) throw InvalidArgument("mesh extents must be positive");
  if (nx < 1 || nt < 1) throw InvalidArgument("mesh resolution must be >= 1");

  const double hx = L / nx;
  const double ht = T / nt;
  auto vertex_id = [nx](int i, int j) { return j * (nx + 1) + i; };
  auto vertex_pos = [hx, ht](int i, int j) { return Vec2(i * hx, j * ht); };

  for (int j = 0; j < nt; ++j) {
    for (int i = 0; i < nx; ++i) {
      connectivity_.push_back({vertex_id(i, j), vertex_id(i + 1, j), vertex_id(i + 1, j + 1)});
      geometry_.push_back({{vertex_pos(i, j), vertex_pos(i + 1, j), vertex_pos(i + 1, j + 1)}, {}, {}, 0.0});
      connectivity_.push_back({vertex_id(i, j), vertex_id(i + 1, j + 1), vertex_id(i, j + 1)});
      geometry_.push_back({{vertex_pos(i, j), vertex_pos(i + 1, j + 1), vertex_pos(i, j + 1)}, {}, {}, 0.0});
    }
  }
  for (auto& g : geometry_) {
    g.jacobian.col(0) = g.vertices[1] - g.vertices[0];
    g.jacobian.col(1) = g.vertices[2] - g.vertices[0];
    g.det = g.jacobian.determinant();
    g.inverse_jacobian = g.jacobian.inverse();
  }

  const int ne = num_elements();
  element_facets_.assign(ne, {-1, -1, -1});
  std::map<std::pair<int, int>, int> edge_to_facet;
  static constexpr int kEdgeVerts[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (int k = 0; k < ne; ++k) {
    for (int e = 0; e < 3; ++e) {
      const int va = connectivity_[k][kEdgeVerts[e][0]];
      const int vb = connectivity_[k][kEdgeVerts[e][1]];
      const auto key = std::minmax(va, vb);
      auto it = edge_to_facet.find(key);
      if (it == edge_to_facet.end()) {
        Facet f;
        f.elem[0] = k;
        f.local_edge[0] = e;
        f.a = geometry_[k].vertices[kEdgeVerts[e][0]];
        f.b = geometry_[k].vertices[kEdgeVerts[e][1]];
        const Vec2 d = f.b - f.a;
        f.length = d.norm();
        // Counter-clockwise elements: the outward normal is the edge direction rotated clockwise.
        f.normal = Vec2(d.y(), -d.x()) / f.length;
        f.side = classify(f.a, f.b, L, T);
        edge_to_facet.emplace(key, static_cast<int>(facets_.size()));
        element_facets_[k][e] = static_cast<int>(facets_.size());
        facets_.push_back(f);
      } else {
        Facet& f = facets_[it->second];
        f.elem[1] = k;
        f.local_edge[1] = e;
        element_facets_[k][e] = it->second;
      }
    }
  }

  const auto& ref_nodes = ref_.nodes();
  nodes_.reserve(static_cast<std::size_t>(ne) * ref_nodes.size());
  lattice_.reserve(nodes_.capacity());
  for (int k = 0; k < ne; ++k) {
    for (const auto& xi : ref_nodes) {
      const Vec2 x = to_physical(k, xi);
      nodes_.push_back(x);
      lattice_.push_back({static_cast<int>(std::lround(x.x() / hx * p)),
                          static_cast<int>(std::lround(x.y() / ht * p))});
    }
  }
}

int SpaceTimeMesh::neighbor(int k, int e) const {
  const Facet& f = facets_[element_facets_[k][e]];
  if (f.is_boundary()) return -1;
  return f.elem[0] == k ? f.elem[1] : f.elem[0];
}

const Facet& SpaceTimeMesh::facet(int f) const {
  if (f < 0 || f >= num_facets()) throw InvalidArgument("facet id out of range");
  return facets_[f];
}

int SpaceTimeMesh::locate(const Vec2& x) const {
  const double sx = x.x() / hx();
  const double st = x.y() / ht();
  int i = std::clamp(static_cast<int>(std::floor(sx)), 0, nx_ - 1);
  int j = std::clamp(static_cast<int>(std::floor(st)), 0, nt_ - 1);
  if (i > 0 && sx == static_cast<double>(i)) --i;
  if (j > 0 && st == static_cast<double>(j)) --j;
  const double fx = sx - i;
  const double ft = st - j;
  const int cell = j * nx_ + i;
  return ft <= fx ? 2 * cell : 2 * cell + 1;
}

Vec2 SpaceTimeMesh::to_reference(int k, const Vec2& x) const {
  const auto& g = geometry_[k];
  return g.inverse_jacobian * (x - g.vertices[0]);
}

Vec2 SpaceTimeMesh::to_physical(int k, const Vec2& xi) const {
  const auto& g = geometry_[k];
  return g.vertices[0] + g.jacobian * xi;
}

bool SpaceTimeMesh::clamp_to_domain(Vec2& x, double tol) const {
  const bool outside = x.x() < -tol || x.x() > L_ + tol || x.y() < -tol || x.y() > T_ + tol;
  x.x() = std::clamp(x.x(), 0.0, L_);
  x.y() = std::clamp(x.y(), 0.0, T_);
  return outside;
}

std::array<int, 2> SpaceTimeMesh::lattice_index(int node) const { return lattice_[node]; }

std::uint64_t SpaceTimeMesh::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  fnv_mix(h, &L_, sizeof L_);
  fnv_mix(h, &T_, sizeof T_);
  fnv_mix(h, &nx_, sizeof nx_);
  fnv_mix(h, &nt_, sizeof nt_);
  const int p = order();
  fnv_mix(h, &p, sizeof p);
  for (const auto& c : connectivity_) fnv_mix(h, c.data(), sizeof(int) * 3);
  return h;
}

std::shared_ptr<const SpaceTimeMesh> build_structured_mesh(double L, double T, int nx, int nt, int p) {
  if (p < 1 || p > 3) throw InvalidArgument("polynomial order must be 1, 2 or 3");
  return std::make_shared<const SpaceTimeMesh>(L, T, nx, nt, p);
}

std::pair<Vec2, double> facet_normal_and_length(const SpaceTimeMesh& mesh, int facet_id) {
  const Facet& f = mesh.facet(facet_id);
  return {f.normal, f.length};
}

}  // namespace strobe
