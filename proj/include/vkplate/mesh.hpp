#ifndef VKPLATE_MESH_HPP
#define VKPLATE_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "vkplate/geometry.hpp"

namespace vkplate {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A triangle with counterclockwise vertices. The refinement edge is the
/// edge opposite `vertices[refinement_edge]`, i.e. local edge k joins
/// vertices k+1 and k+2 (mod 3).
struct Triangle {
  std::array<std::size_t, 3> vertices{};
  int refinement_edge = 0;
  int generation = 0;
  std::size_t uid = invalid_index;
  std::size_t parent = invalid_index;  // uid of the parent, invalid for roots
};

struct Edge {
  std::array<std::size_t, 2> vertices{};  // lower id first
  std::array<std::size_t, 2> triangles{invalid_index, invalid_index};
  std::array<int, 2> local_index{-1, -1};
  bool is_boundary = false;
  Point tangent;  // lower -> higher endpoint
  Point normal;   // tangent rotated by +90 degrees
  double length = 0.0;
};

/// Append-only record of every triangle ever created from one initial mesh.
/// Shared by all meshes of a refinement family so that ancestry survives
/// intermediate bisections that never appear in an output mesh.
class Genealogy {
 public:
  std::size_t add(std::size_t parent_uid, int generation) {
    std::scoped_lock lock(mutex_);
    parent_.push_back(parent_uid);
    generation_.push_back(generation);
    return parent_.size() - 1;
  }
  std::size_t parent(std::size_t uid) const {
    std::scoped_lock lock(mutex_);
    return parent_.at(uid);
  }
  std::size_t size() const {
    std::scoped_lock lock(mutex_);
    return parent_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::size_t> parent_;
  std::vector<int> generation_;
};

class Mesh {
 public:
  Mesh() = default;

  /// Builds a mesh from raw lists. Refinement edges are taken as given.
  /// Throws MeshError on inverted, degenerate, non-manifold or
  /// non-conforming input.
  static Mesh from_lists(std::vector<Point> vertices, const std::vector<std::array<std::size_t, 3>>& triangles,
                         const std::vector<int>& refinement_edges) {
    if (triangles.size() != refinement_edges.size())
      throw MeshError("mesh: refinement edge list does not match triangle count");
    auto genealogy = std::make_shared<Genealogy>();
    std::vector<Triangle> tris;
    tris.reserve(triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) {
      if (refinement_edges[t] < 0 || refinement_edges[t] > 2)
        throw MeshError("mesh: refinement edge index out of range in triangle " + std::to_string(t));
      Triangle tri;
      tri.vertices = triangles[t];
      tri.refinement_edge = refinement_edges[t];
      tri.uid = genealogy->add(invalid_index, 0);
      tris.push_back(tri);
    }
    Mesh mesh(std::move(vertices), std::move(tris), std::move(genealogy));
    mesh.check_no_hanging_vertices();
    return mesh;
  }

  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::shared_ptr<Genealogy> genealogy)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)), genealogy_(std::move(genealogy)) {
    build_topology();
  }

  std::size_t n_vertices() const { return vertices_.size(); }
  std::size_t n_triangles() const { return triangles_.size(); }
  std::size_t n_edges() const { return edges_.size(); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<Edge>& edges() const { return edges_; }

  const Point& vertex(std::size_t v) const { return vertices_[v]; }
  const Triangle& triangle(std::size_t t) const { return triangles_[t]; }
  const Edge& edge(std::size_t e) const { return edges_[e]; }

  /// Edge ids of triangle t, indexed by local edge (opposite local vertex).
  const std::array<std::size_t, 3>& triangle_edges(std::size_t t) const { return triangle_edges_[t]; }
  std::size_t refinement_edge_id(std::size_t t) const { return triangle_edges_[t][triangles_[t].refinement_edge]; }

  double area(std::size_t t) const { return area_[t]; }
  double mesh_size(std::size_t t) const { return std::sqrt(area_[t]); }
  double max_mesh_size() const {
    double h = 0.0;
    for (std::size_t t = 0; t < n_triangles(); ++t) h = std::max(h, mesh_size(t));
    return h;
  }
  double total_area() const {
    double a = 0.0;
    for (double x : area_) a += x;
    return a;
  }

  std::array<Point, 3> corners(std::size_t t) const {
    const auto& v = triangles_[t].vertices;
    return {vertices_[v[0]], vertices_[v[1]], vertices_[v[2]]};
  }
  Point centroid(std::size_t t) const {
    const auto p = corners(t);
    return {(p[0].x + p[1].x + p[2].x) / 3.0, (p[0].y + p[1].y + p[2].y) / 3.0};
  }

  bool is_boundary_vertex(std::size_t v) const { return boundary_vertex_[v]; }
  std::size_t n_boundary_vertices() const {
    return static_cast<std::size_t>(std::count(boundary_vertex_.begin(), boundary_vertex_.end(), true));
  }
  std::size_t n_boundary_edges() const {
    return static_cast<std::size_t>(
        std::count_if(edges_.begin(), edges_.end(), [](const Edge& e) { return e.is_boundary; }));
  }

  const std::shared_ptr<Genealogy>& genealogy() const { return genealogy_; }

  /// True if every interior refinement edge is also the refinement edge of
  /// its neighbour (the NVB initial compatibility condition).
  bool has_compatible_refinement_edges() const {
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& edge = edges_[e];
      if (edge.is_boundary) continue;
      const bool a = refinement_edge_id(edge.triangles[0]) == e;
      const bool b = refinement_edge_id(edge.triangles[1]) == e;
      if (a != b) return false;
    }
    return true;
  }

 private:
  void build_topology() {
    const std::size_t nt = triangles_.size();
    for (const Point& p : vertices_)
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw MeshError("mesh: non-finite vertex coordinate");

    area_.resize(nt);
    struct HalfEdge {
      std::size_t lo, hi, tri;
      int local;
    };
    std::vector<HalfEdge> half;
    half.reserve(3 * nt);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto& v = triangles_[t].vertices;
      for (auto id : v)
        if (id >= vertices_.size()) throw MeshError("mesh: triangle " + std::to_string(t) + " references unknown vertex");
      if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2])
        throw MeshError("mesh: triangle " + std::to_string(t) + " repeats a vertex");
      const Point p0 = vertices_[v[0]], p1 = vertices_[v[1]], p2 = vertices_[v[2]];
      const double a2 = signed_area2(p0, p1, p2);
      // relative to the element's own size so that deep local refinement stays valid
      const double longest = std::max({dot(p1 - p0, p1 - p0), dot(p2 - p1, p2 - p1), dot(p0 - p2, p0 - p2)});
      if (a2 <= 1e-12 * longest)
        throw MeshError("mesh: triangle " + std::to_string(t) + " is inverted or degenerate");
      area_[t] = 0.5 * a2;
      for (int k = 0; k < 3; ++k) {
        const std::size_t a = v[(k + 1) % 3];
        const std::size_t b = v[(k + 2) % 3];
        half.push_back({std::min(a, b), std::max(a, b), t, k});
      }
    }
    std::sort(half.begin(), half.end(), [](const HalfEdge& l, const HalfEdge& r) {
      return std::tie(l.lo, l.hi, l.tri) < std::tie(r.lo, r.hi, r.tri);
    });

    edges_.clear();
    triangle_edges_.assign(nt, {invalid_index, invalid_index, invalid_index});
    boundary_vertex_.assign(vertices_.size(), false);
    for (std::size_t i = 0; i < half.size();) {
      std::size_t j = i;
      while (j < half.size() && half[j].lo == half[i].lo && half[j].hi == half[i].hi) ++j;
      if (j - i > 2)
        throw MeshError("mesh: non-manifold edge (" + std::to_string(half[i].lo) + ", " + std::to_string(half[i].hi) + ")");
      Edge edge;
      edge.vertices = {half[i].lo, half[i].hi};
      edge.is_boundary = (j - i == 1);
      for (std::size_t k = i; k < j; ++k) {
        edge.triangles[k - i] = half[k].tri;
        edge.local_index[k - i] = half[k].local;
        triangle_edges_[half[k].tri][half[k].local] = edges_.size();
      }
      const Point d = vertices_[edge.vertices[1]] - vertices_[edge.vertices[0]];
      edge.length = norm(d);
      edge.tangent = (1.0 / edge.length) * d;
      edge.normal = {-edge.tangent.y, edge.tangent.x};
      if (edge.is_boundary) {
        boundary_vertex_[edge.vertices[0]] = true;
        boundary_vertex_[edge.vertices[1]] = true;
      }
      edges_.push_back(edge);
      i = j;
    }
  }

  void check_no_hanging_vertices() const {
    std::vector<int> boundary_degree(vertices_.size(), 0);
    for (const Edge& e : edges_) {
      if (!e.is_boundary) continue;
      ++boundary_degree[e.vertices[0]];
      ++boundary_degree[e.vertices[1]];
      const Point a = vertices_[e.vertices[0]];
      const Point b = vertices_[e.vertices[1]];
      for (std::size_t v = 0; v < vertices_.size(); ++v) {
        if (v == e.vertices[0] || v == e.vertices[1]) continue;
        const Point p = vertices_[v];
        const double tol = 1e-12 * e.length * e.length;
        if (std::abs(signed_area2(a, b, p)) > tol) continue;
        const double s = dot(p - a, b - a) / (e.length * e.length);
        if (s > 1e-12 && s < 1.0 - 1e-12)
          throw MeshError("mesh: hanging vertex " + std::to_string(v) + " on edge (" + std::to_string(e.vertices[0]) +
                          ", " + std::to_string(e.vertices[1]) + ")");
      }
    }
    for (std::size_t v = 0; v < vertices_.size(); ++v)
      if (boundary_degree[v] % 2 != 0) throw MeshError("mesh: boundary is not a closed polygon at vertex " + std::to_string(v));
  }

  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> edges_;
  std::vector<std::array<std::size_t, 3>> triangle_edges_;
  std::vector<double> area_;
  std::vector<bool> boundary_vertex_;
  std::shared_ptr<Genealogy> genealogy_;
};

// ---------------------------------------------------------------------------
// Initial meshes

struct UnitSquare {};
/// (-1,1)^2 minus [0,1) x (-1,0); re-entrant corner at the origin.
struct LShape {};
struct CustomDomain {
  std::vector<Point> vertices;
  std::vector<std::array<std::size_t, 3>> triangles;
  /// Refinement edges to keep if they are already compatible.
  std::optional<std::vector<int>> refinement_edges;
};
using Domain = std::variant<UnitSquare, LShape, CustomDomain>;

namespace detail {

inline int longest_edge(const std::vector<Point>& p, const std::array<std::size_t, 3>& v) {
  int best = 0;
  double best_len = -1.0;
  for (int k = 0; k < 3; ++k) {
    const double len = norm(p[v[(k + 1) % 3]] - p[v[(k + 2) % 3]]);
    const bool longer = len > best_len * (1.0 + 1e-12);
    const bool tie = !longer && len >= best_len * (1.0 - 1e-12);
    if (longer || (tie && v[k] < v[best])) {
      best = k;
      best_len = std::max(len, best_len);
    }
  }
  return best;
}

/// Longest-edge assignment followed by a repair sweep. Returns nullopt if
/// some interior edge stays incompatible.
inline std::optional<std::vector<int>> sweep_refinement_edges(const std::vector<Point>& vertices,
                                                              const std::vector<std::array<std::size_t, 3>>& triangles) {
  std::vector<int> refs(triangles.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) refs[t] = longest_edge(vertices, triangles[t]);
  Mesh mesh = Mesh::from_lists(vertices, triangles, refs);

  auto ref_id = [&](std::size_t t) { return mesh.triangle_edges(t)[refs[t]]; };
  // An edge is "settled" if it is boundary or a refinement edge of both sides.
  auto settled = [&](std::size_t e) {
    const Edge& edge = mesh.edge(e);
    if (edge.is_boundary) return true;
    return ref_id(edge.triangles[0]) == e && ref_id(edge.triangles[1]) == e;
  };
  for (std::size_t pass = 0; pass <= triangles.size(); ++pass) {
    bool changed = false;
    bool clean = true;
    for (std::size_t e = 0; e < mesh.n_edges(); ++e) {
      const Edge& edge = mesh.edge(e);
      if (edge.is_boundary) continue;
      const std::size_t a = edge.triangles[0];
      const std::size_t b = edge.triangles[1];
      const bool ra = ref_id(a) == e;
      const bool rb = ref_id(b) == e;
      if (ra == rb) continue;
      clean = false;
      const std::size_t holder = ra ? a : b;
      const std::size_t other = ra ? b : a;
      const int other_local = ra ? edge.local_index[1] : edge.local_index[0];
      if (!settled(ref_id(other))) {
        refs[other] = other_local;
        changed = true;
        continue;
      }
      // Otherwise move the holder onto a boundary edge if it has one.
      for (int k = 0; k < 3; ++k) {
        if (mesh.edge(mesh.triangle_edges(holder)[k]).is_boundary) {
          refs[holder] = k;
          changed = true;
          break;
        }
      }
    }
    if (clean) return refs;
    if (!changed) break;
  }
  return std::nullopt;
}

}  // namespace detail

/// Initial triangulation with compatible refinement edges.
inline Mesh build_initial_mesh(const Domain& domain) {
  if (std::holds_alternative<UnitSquare>(domain)) {
    return Mesh::from_lists({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}}, {1, 2});
  }
  if (std::holds_alternative<LShape>(domain)) {
    // Three unit squares, each split by the diagonal through the origin.
    std::vector<Point> p = {{-1, -1}, {0, -1}, {0, 0}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}};
    std::vector<std::array<std::size_t, 3>> t = {{0, 1, 2}, {0, 2, 3}, {3, 2, 4}, {2, 5, 4}, {2, 7, 6}, {2, 6, 5}};
    std::vector<int> refs(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) refs[i] = detail::longest_edge(p, t[i]);
    return Mesh::from_lists(std::move(p), t, refs);
  }
  const auto& custom = std::get<CustomDomain>(domain);
  if (custom.refinement_edges) {
    Mesh given = Mesh::from_lists(custom.vertices, custom.triangles, *custom.refinement_edges);
    if (given.has_compatible_refinement_edges()) return given;
  }
  if (auto refs = detail::sweep_refinement_edges(custom.vertices, custom.triangles))
    return Mesh::from_lists(custom.vertices, custom.triangles, *refs);

  // Fallback: split every triangle at its centroid; the original edges become
  // refinement edges on both sides, the new spokes are never refinement edges.
  std::vector<Point> p = custom.vertices;
  std::vector<std::array<std::size_t, 3>> t;
  std::vector<int> refs;
  for (const auto& tri : custom.triangles) {
    const Point g = (1.0 / 3.0) * (p[tri[0]] + p[tri[1]] + p[tri[2]]);
    const std::size_t c = p.size();
    p.push_back(g);
    for (int k = 0; k < 3; ++k) {
      t.push_back({tri[k], tri[(k + 1) % 3], c});
      refs.push_back(2);
    }
  }
  Mesh split = Mesh::from_lists(std::move(p), t, refs);
  if (!split.has_compatible_refinement_edges())
    throw MeshError("mesh: could not find compatible refinement edges for custom mesh");
  return split;
}

// ---------------------------------------------------------------------------
// Newest vertex bisection

namespace detail {

/// Bisects `tri` across its refinement edge at vertex `mid`. Both children
/// take the edge opposite `mid` as refinement edge.
inline std::array<Triangle, 2> bisect(const Triangle& tri, std::size_t mid, Genealogy& genealogy) {
  const int k = tri.refinement_edge;
  const std::size_t apex = tri.vertices[k];
  const std::size_t p = tri.vertices[(k + 1) % 3];
  const std::size_t q = tri.vertices[(k + 2) % 3];
  Triangle left;
  left.vertices = {apex, p, mid};
  left.refinement_edge = 2;
  Triangle right;
  right.vertices = {apex, mid, q};
  right.refinement_edge = 1;
  for (Triangle* c : {&left, &right}) {
    c->generation = tri.generation + 1;
    c->parent = tri.uid;
    c->uid = genealogy.add(tri.uid, c->generation);
  }
  return {left, right};
}

}  // namespace detail

/// Smallest NVB refinement in which every marked triangle is bisected at
/// least once, with completion so that the result has no hanging vertices.
inline Mesh refine(const Mesh& mesh, std::span<const std::size_t> marked) {
  if (marked.empty()) return mesh;
  const std::size_t ne = mesh.n_edges();
  std::vector<char> edge_marked(ne, 0);
  std::vector<std::size_t> work;
  auto mark_edge = [&](std::size_t e) {
    if (edge_marked[e]) return;
    edge_marked[e] = 1;
    for (std::size_t t : mesh.edge(e).triangles)
      if (t != invalid_index) work.push_back(t);
  };
  for (std::size_t t : marked) {
    if (t >= mesh.n_triangles()) throw MeshError("refine: marked triangle id out of range");
    mark_edge(mesh.refinement_edge_id(t));
  }
  // Closure: a triangle with any marked edge must have its refinement edge marked.
  while (!work.empty()) {
    const std::size_t t = work.back();
    work.pop_back();
    mark_edge(mesh.refinement_edge_id(t));
  }

  std::vector<Point> vertices = mesh.vertices();
  std::vector<std::size_t> midpoint_of(ne, invalid_index);
  for (std::size_t e = 0; e < ne; ++e) {
    if (!edge_marked[e]) continue;
    const Edge& edge = mesh.edge(e);
    midpoint_of[e] = vertices.size();
    vertices.push_back(midpoint(mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1])));
  }

  Genealogy& genealogy = *mesh.genealogy();
  std::vector<Triangle> triangles;
  triangles.reserve(2 * mesh.n_triangles());
  for (std::size_t t = 0; t < mesh.n_triangles(); ++t) {
    const Triangle& tri = mesh.triangle(t);
    const auto& te = mesh.triangle_edges(t);
    const int k = tri.refinement_edge;
    if (!edge_marked[te[k]]) {
      triangles.push_back(tri);
      continue;
    }
    const auto children = detail::bisect(tri, midpoint_of[te[k]], genealogy);
    // The left child's refinement edge is the parent's edge k+2, the right
    // child's the parent's edge k+1.
    const std::array<std::size_t, 2> child_ref_edge = {te[(k + 2) % 3], te[(k + 1) % 3]};
    for (int c = 0; c < 2; ++c) {
      if (edge_marked[child_ref_edge[c]]) {
        const auto grand = detail::bisect(children[c], midpoint_of[child_ref_edge[c]], genealogy);
        triangles.push_back(grand[0]);
        triangles.push_back(grand[1]);
      } else {
        triangles.push_back(children[c]);
      }
    }
  }
  return Mesh(std::move(vertices), std::move(triangles), mesh.genealogy());
}

inline Mesh refine(const Mesh& mesh, std::initializer_list<std::size_t> marked) {
  return refine(mesh, std::span<const std::size_t>(marked.begin(), marked.size()));
}

inline Mesh uniform_refine(const Mesh& mesh) {
  std::vector<std::size_t> all(mesh.n_triangles());
  for (std::size_t t = 0; t < all.size(); ++t) all[t] = t;
  return refine(mesh, all);
}

// ---------------------------------------------------------------------------
// Two-level bookkeeping

/// Split of a coarse/fine pair into common, coarse-only and fine-only
/// triangles. Indices refer to the respective mesh.
struct MeshPartition {
  std::vector<std::size_t> common_coarse;
  std::vector<std::size_t> common_fine;  // aligned with common_coarse
  std::vector<std::size_t> coarse_only;
  std::vector<std::size_t> fine_only;
  std::vector<std::size_t> ancestor;  // fine triangle -> coarse triangle
};

inline MeshPartition mesh_partition(const Mesh& coarse, const Mesh& fine) {
  if (!coarse.genealogy() || coarse.genealogy() != fine.genealogy())
    throw MeshError("mesh_partition: meshes do not share a refinement history");
  const Genealogy& genealogy = *coarse.genealogy();
  std::vector<std::size_t> coarse_of_uid(genealogy.size(), invalid_index);
  for (std::size_t t = 0; t < coarse.n_triangles(); ++t) coarse_of_uid[coarse.triangle(t).uid] = t;

  MeshPartition part;
  part.ancestor.resize(fine.n_triangles());
  std::vector<char> coarse_kept(coarse.n_triangles(), 0);
  for (std::size_t t = 0; t < fine.n_triangles(); ++t) {
    std::size_t uid = fine.triangle(t).uid;
    const std::size_t own = uid;
    while (uid != invalid_index && coarse_of_uid[uid] == invalid_index) uid = genealogy.parent(uid);
    if (uid == invalid_index) throw MeshError("mesh_partition: fine mesh is not a refinement of the coarse mesh");
    const std::size_t k = coarse_of_uid[uid];
    part.ancestor[t] = k;
    if (uid == own) {
      coarse_kept[k] = 1;
      part.common_coarse.push_back(k);
      part.common_fine.push_back(t);
    } else {
      part.fine_only.push_back(t);
    }
  }
  for (std::size_t k = 0; k < coarse.n_triangles(); ++k)
    if (!coarse_kept[k]) part.coarse_only.push_back(k);
  return part;
}

}  // namespace vkplate

#endif  // VKPLATE_MESH_HPP
