#pragma once

// Triangle meshes living on a collection of chart patches.
//
// Every vertex has 2D chart coordinates in its own patch; a triangle's
// geometry is read from the coordinates of its three vertices, so seams and
// periodic wraps are expressed by gluing vertex pairs rather than by sharing
// indices. After identification the glued mesh must be conforming.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "prescribe/error.hpp"

namespace prescribe::fem {

using Eigen::Matrix2d;
using Eigen::Vector2d;

struct BoundaryEdge {
  int a = 0;
  int b = 0;
  std::string tag;
};

struct Mesh {
  std::vector<Vector2d> vertices;
  std::vector<int> vertex_patch;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<std::pair<int, int>> gluing;
  std::vector<std::string> patch_names;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
};

/// Chart metric frozen at each triangle's centroid.
struct MetricField {
  std::vector<Matrix2d> g;
};

struct MeshedDomain {
  Mesh mesh;
  MetricField metric;
};

// ---------------------------------------------------------------------------
// Construction helpers.

inline int add_patch(Mesh& m, std::string name) {
  m.patch_names.push_back(std::move(name));
  return static_cast<int>(m.patch_names.size()) - 1;
}

inline int add_vertex(Mesh& m, const Vector2d& p, int patch) {
  m.vertices.push_back(p);
  m.vertex_patch.push_back(patch);
  return m.vertex_count() - 1;
}

template <class MetricFn>
void add_triangle(MeshedDomain& d, int a, int b, int c, MetricFn&& metric_at) {
  d.mesh.triangles.push_back({a, b, c});
  const Vector2d centroid = (d.mesh.vertices[a] + d.mesh.vertices[b] + d.mesh.vertices[c]) / 3.0;
  d.metric.g.push_back(metric_at(centroid));
}

inline Matrix2d flat_metric(const Vector2d&) { return Matrix2d::Identity(); }

/// Vertex grid over xs x ys; cells with keep(i, j) false are left out.
/// Returns ids[i][j]; unused vertices are removed later by compact().
template <class MetricFn, class KeepFn>
std::vector<std::vector<int>> structured_grid(MeshedDomain& d, int patch, const std::vector<double>& xs,
                                              const std::vector<double>& ys, MetricFn&& metric_at, KeepFn&& keep) {
  std::vector<std::vector<int>> id(xs.size(), std::vector<int>(ys.size()));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) id[i][j] = add_vertex(d.mesh, {xs[i], ys[j]}, patch);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      if (!keep(static_cast<int>(i), static_cast<int>(j))) continue;
      add_triangle(d, id[i][j], id[i + 1][j], id[i + 1][j + 1], metric_at);
      add_triangle(d, id[i][j], id[i + 1][j + 1], id[i][j + 1], metric_at);
    }
  return id;
}

template <class MetricFn>
std::vector<std::vector<int>> structured_grid(MeshedDomain& d, int patch, const std::vector<double>& xs,
                                              const std::vector<double>& ys, MetricFn&& metric_at) {
  return structured_grid(d, patch, xs, ys, metric_at, [](int, int) { return true; });
}

inline std::vector<double> uniform_nodes(double a, double b, int n) {
  std::vector<double> x(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) x[static_cast<std::size_t>(i)] = a + (b - a) * i / n;
  x.back() = b;
  return x;
}

/// Identifies two vertex rings position by position.
inline void glue_rings(Mesh& m, const std::vector<int>& ring_a, const std::vector<int>& ring_b,
                       const std::string& seam) {
  if (ring_a.size() != ring_b.size())
    throw ValidationError("seam '" + seam + "': vertex counts differ (" + std::to_string(ring_a.size()) + " vs " +
                          std::to_string(ring_b.size()) + ")");
  for (std::size_t k = 0; k < ring_a.size(); ++k)
    if (ring_a[k] != ring_b[k]) m.gluing.emplace_back(ring_a[k], ring_b[k]);
}

/// Tags the edges of a vertex path; closed paths also tag last -> first.
inline void tag_path(Mesh& m, const std::vector<int>& path, const std::string& tag, bool closed) {
  const std::size_t n = path.size();
  const std::size_t edges = closed ? n : n - 1;
  for (std::size_t k = 0; k < edges; ++k) m.boundary_edges.push_back({path[k], path[(k + 1) % n], tag});
}

/// Drops vertices not referenced by any triangle and renumbers.
inline void compact(Mesh& m) {
  std::vector<int> used(m.vertices.size(), 0);
  for (const auto& t : m.triangles)
    for (int v : t) used[static_cast<std::size_t>(v)] = 1;
  std::vector<int> remap(m.vertices.size(), -1);
  int next = 0;
  for (std::size_t v = 0; v < m.vertices.size(); ++v)
    if (used[v]) remap[v] = next++;
  std::vector<Vector2d> verts;
  std::vector<int> patch;
  verts.reserve(static_cast<std::size_t>(next));
  for (std::size_t v = 0; v < m.vertices.size(); ++v)
    if (used[v]) {
      verts.push_back(m.vertices[v]);
      patch.push_back(m.vertex_patch[v]);
    }
  for (auto& t : m.triangles)
    for (int& v : t) v = remap[static_cast<std::size_t>(v)];
  std::vector<BoundaryEdge> edges;
  for (auto e : m.boundary_edges) {
    if (remap[e.a] < 0 || remap[e.b] < 0) throw ValidationError("boundary edge references an unused vertex");
    e.a = remap[e.a];
    e.b = remap[e.b];
    edges.push_back(std::move(e));
  }
  // Gluing classes may pass through dropped vertices; reconnect the
  // surviving members of each class as a chain.
  std::vector<int> parent(m.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (auto [a, b] : m.gluing) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<int> last(m.vertices.size(), -1);
  std::vector<std::pair<int, int>> glue;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    if (!used[v]) continue;
    const int r = find(static_cast<int>(v));
    if (last[r] >= 0) glue.emplace_back(remap[last[r]], remap[v]);
    last[r] = static_cast<int>(v);
  }
  m.vertices = std::move(verts);
  m.vertex_patch = std::move(patch);
  m.boundary_edges = std::move(edges);
  m.gluing = std::move(glue);
}

// ---------------------------------------------------------------------------
// Degrees of freedom after identification.

struct DofMap {
  std::vector<int> dof_of_vertex;
  int n_dofs = 0;
};

inline DofMap build_dofs(const Mesh& m) {
  std::vector<int> parent(m.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  for (auto [a, b] : m.gluing) {
    const int ra = find(a), rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  DofMap out;
  out.dof_of_vertex.assign(m.vertices.size(), -1);
  std::vector<int> dof_of_root(m.vertices.size(), -1);
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    const int r = find(static_cast<int>(v));
    if (dof_of_root[r] < 0) dof_of_root[r] = out.n_dofs++;
    out.dof_of_vertex[v] = dof_of_root[r];
  }
  return out;
}

inline double chart_area(const Mesh& m, const std::array<int, 3>& t) {
  const Vector2d e1 = m.vertices[t[1]] - m.vertices[t[0]];
  const Vector2d e2 = m.vertices[t[2]] - m.vertices[t[0]];
  return 0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x());
}

inline bool is_spd(const Matrix2d& g) {
  return std::isfinite(g.sum()) && std::abs(g(0, 1) - g(1, 0)) <= 1e-12 * g.cwiseAbs().maxCoeff() &&
         g(0, 0) > 0.0 && g.determinant() > 0.0;
}

/// Checks indices, element metrics, orphan vertices and conformity of the
/// glued mesh: every interior edge has two triangles, every other edge
/// exactly one tag.
inline void validate(const Mesh& m, const MetricField& metric) {
  const int nv = m.vertex_count();
  if (m.vertex_patch.size() != m.vertices.size()) throw ValidationError("mesh: vertex patch list size mismatch");
  if (metric.g.size() != m.triangles.size()) throw ValidationError("mesh: one metric tensor per triangle required");
  std::vector<int> used(m.vertices.size(), 0);
  for (std::size_t k = 0; k < m.triangles.size(); ++k) {
    for (int v : m.triangles[k]) {
      if (v < 0 || v >= nv) throw ValidationError("mesh: triangle vertex index out of range");
      used[static_cast<std::size_t>(v)] = 1;
    }
    if (!(chart_area(m, m.triangles[k]) > 0.0)) throw ValidationError("mesh: degenerate triangle " + std::to_string(k));
    if (!is_spd(metric.g[k])) throw ValidationError("mesh: metric not SPD on triangle " + std::to_string(k));
  }
  for (int v = 0; v < nv; ++v)
    if (!used[static_cast<std::size_t>(v)]) throw ValidationError("mesh: orphan vertex " + std::to_string(v));
  for (auto [a, b] : m.gluing)
    if (a < 0 || b < 0 || a >= nv || b >= nv || a == b) throw ValidationError("mesh: invalid gluing pair");

  const auto dofs = build_dofs(m);
  auto key = [&](int a, int b) {
    int da = dofs.dof_of_vertex[a], db = dofs.dof_of_vertex[b];
    return std::make_pair(std::min(da, db), std::max(da, db));
  };
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : m.triangles)
    for (int e = 0; e < 3; ++e) {
      const auto k = key(t[e], t[(e + 1) % 3]);
      if (k.first == k.second) throw ValidationError("mesh: gluing collapses a triangle edge");
      ++count[k];
    }
  std::map<std::pair<int, int>, int> tagged;
  for (const auto& e : m.boundary_edges) {
    if (e.a < 0 || e.b < 0 || e.a >= nv || e.b >= nv) throw ValidationError("mesh: boundary edge out of range");
    if (e.tag.empty()) throw ValidationError("mesh: boundary edge without tag");
    const auto k = key(e.a, e.b);
    auto it = count.find(k);
    if (it == count.end() || it->second != 1) throw ValidationError("mesh: tagged edge is not on the boundary");
    if (++tagged[k] > 1) throw ValidationError("mesh: boundary edge tagged twice");
  }
  for (const auto& [k, c] : count) {
    if (c > 2) throw ValidationError("mesh: non-manifold edge");
    if (c == 1 && !tagged.count(k))
      throw ValidationError("mesh: untagged boundary edge (unmatched seam?) between dofs " + std::to_string(k.first) +
                            " and " + std::to_string(k.second));
  }
}

inline double surface_area(const Mesh& m, const MetricField& metric) {
  double a = 0.0;
  for (std::size_t k = 0; k < m.triangles.size(); ++k)
    a += chart_area(m, m.triangles[k]) * std::sqrt(metric.g[k].determinant());
  return a;
}

inline double surface_area(const MeshedDomain& d) { return surface_area(d.mesh, d.metric); }

inline std::vector<std::string> boundary_tags(const Mesh& m) {
  std::vector<std::string> tags;
  for (const auto& e : m.boundary_edges)
    if (std::find(tags.begin(), tags.end(), e.tag) == tags.end()) tags.push_back(e.tag);
  return tags;
}

}  // namespace prescribe::fem
