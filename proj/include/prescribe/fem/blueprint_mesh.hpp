#pragma once

// Meshes a SurfaceBlueprint in the unscaled metric h_eps.
//
// Every glued circle carries n_theta vertices (a multiple of 8), so seams
// match by construction. Box faces use a square grid of spacing 1/n_theta,
// which puts n_theta vertices on each port boundary; tubes are periodic
// strips in the chart (x, theta) with n_theta columns and uniform rows.
// The optional rectangle lives in eps-scaled units with metric I / eps and
// is graded towards its attachment interval.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "prescribe/fem/mesh.hpp"
#include "prescribe/surface_model.hpp"

namespace prescribe::fem {

inline constexpr const char* kBoundaryTag = "boundary";
inline constexpr const char* kRectangleTag = "rectangle";
inline constexpr double kDefaultMeshH = 1.0 / 16.0;
inline constexpr int kMinWindowSegments = 2;

/// Discrete topology of a blueprint mesh. Holding a plan fixed while the
/// weights move keeps vertex counts constant, so the discrete spectrum
/// depends smoothly on the weights.
struct MeshPlan {
  int n_theta = 16;
  std::vector<int> tube_rows;
  surface::BoxLayout layout;
  std::vector<int> band_rows;  ///< hub first, then caps
};

inline int theta_columns(double h) {
  if (!(std::isfinite(h) && h > 0.0)) throw ValidationError("mesh h must be positive");
  if (h > 0.125 + 1e-12)
    throw RefinementRequired("waist under-resolved: h = " + std::to_string(h) +
                             " gives fewer than 8 elements around each circle");
  return 8 * static_cast<int>(std::ceil(1.0 / (8.0 * h) - 1e-9));
}

inline MeshPlan plan_mesh(const surface::SurfaceBlueprint& bp, double h = kDefaultMeshH) {
  MeshPlan plan;
  plan.n_theta = theta_columns(h);
  const double delta = 1.0 / plan.n_theta;
  for (const auto& t : bp.tubes) plan.tube_rows.push_back(std::max(4, static_cast<int>(std::ceil(t.chart_length / h))));
  plan.layout = surface::layout_of(bp);
  auto rows = [&](const surface::BoxRealization& b) { return std::max(1, static_cast<int>(std::lround(b.height / delta))); };
  plan.band_rows.push_back(rows(bp.hub.box));
  for (const auto& c : bp.caps) plan.band_rows.push_back(rows(c.box));
  return plan;
}

/// Smallest n_theta >= plan.n_theta whose boundary waist elements resolve the
/// attachment interval c with at least `segments` elements.
inline MeshPlan plan_for_window(const surface::SurfaceBlueprint& disk, const MeshPlan& plan, double c,
                                int segments = kMinWindowSegments) {
  const double ell = disk.scaled_boundary_length();
  const int need = 8 * static_cast<int>(std::ceil(segments * ell / (8.0 * c) - 1e-9));
  if (need <= plan.n_theta) return plan;
  auto out = plan_mesh(disk, 1.0 / need);
  out.layout = plan.layout;
  return out;
}

namespace detail {

/// Spacings growing geometrically from d0 to at most H, rescaled to fill `length`.
inline std::vector<double> graded_offsets(double d0, double length, double H, double ratio = 1.2) {
  std::vector<double> steps;
  double sum = 0.0, s = std::min(d0, length);
  while (sum < length * (1 - 1e-12)) {
    steps.push_back(s);
    sum += s;
    s = std::min(s * ratio, std::max(H, d0));
  }
  std::vector<double> out{0.0};
  double acc = 0.0;
  for (double st : steps) out.push_back(acc += st * length / sum);
  out.back() = length;
  return out;
}

struct BlueprintMesher {
  const surface::SurfaceBlueprint& bp;
  const MeshPlan& plan;
  MeshedDomain d;

  int n() const { return plan.n_theta; }

  std::vector<int> take(const std::vector<std::vector<int>>& ids, std::size_t i) const {
    return {ids[i].begin(), ids[i].begin() + n()};
  }

  /// Box surface; returns one vertex ring per port.
  std::vector<std::vector<int>> box(const std::string& name, const surface::BoxRealization& b, int band_rows) {
    const int u = n() / 8;
    const int K = b.side_units * u;
    const double s = b.side();
    const auto slots = surface::port_slots(b);
    std::vector<std::vector<int>> rings(slots.size());
    std::vector<std::vector<int>> perimeter(2);

    for (int face = 0; face < 2; ++face) {
      const int patch = add_patch(d.mesh, name + (face ? "/top" : "/bottom"));
      auto keep = [&](int i, int j) {
        for (const auto& sl : slots)
          if (sl.face == face && i >= sl.col * u && i < (sl.col + surface::kPortUnits) * u && j >= sl.row * u &&
              j < (sl.row + surface::kPortUnits) * u)
            return false;
        return true;
      };
      const auto xs = uniform_nodes(0.0, s, K);
      const auto ids = structured_grid(d, patch, xs, xs, flat_metric, keep);
      auto& per = perimeter[static_cast<std::size_t>(face)];
      for (int i = 0; i < K; ++i) per.push_back(ids[i][0]);
      for (int j = 0; j < K; ++j) per.push_back(ids[K][j]);
      for (int i = K; i > 0; --i) per.push_back(ids[i][K]);
      for (int j = K; j > 0; --j) per.push_back(ids[0][j]);
      for (std::size_t p = 0; p < slots.size(); ++p) {
        if (slots[p].face != face) continue;
        const int c0 = slots[p].col * u, r0 = slots[p].row * u, w = surface::kPortUnits * u;
        auto& ring = rings[p];
        for (int i = 0; i < w; ++i) ring.push_back(ids[c0 + i][r0]);
        for (int j = 0; j < w; ++j) ring.push_back(ids[c0 + w][r0 + j]);
        for (int i = w; i > 0; --i) ring.push_back(ids[c0 + i][r0 + w]);
        for (int j = w; j > 0; --j) ring.push_back(ids[c0][r0 + j]);
      }
    }

    const int band = add_patch(d.mesh, name + "/band");
    const auto ids =
        structured_grid(d, band, uniform_nodes(0.0, 4.0 * s, 4 * K), uniform_nodes(0.0, b.height, band_rows), flat_metric);
    for (int j = 0; j <= band_rows; ++j) d.mesh.gluing.emplace_back(ids[4 * K][j], ids[0][j]);
    std::vector<int> bottom, top;
    for (int i = 0; i < 4 * K; ++i) {
      bottom.push_back(ids[i][0]);
      top.push_back(ids[i][band_rows]);
    }
    glue_rings(d.mesh, bottom, perimeter[0], name + " bottom edge");
    glue_rings(d.mesh, top, perimeter[1], name + " top edge");
    return rings;
  }

  struct TubeRings {
    std::vector<int> waist, wide;
  };

  TubeRings tube(const std::string& name, const surface::TubeSpec& t, int rows) {
    const int patch = add_patch(d.mesh, name);
    const double l = t.waist;
    auto metric = [l](const Vector2d& c) {
      const double w = l * std::cosh(c.x());
      return Matrix2d{{1.0, 0.0}, {0.0, w * w}};
    };
    const auto ids = structured_grid(d, patch, uniform_nodes(0.0, t.chart_length, rows), uniform_nodes(0.0, 1.0, n()), metric);
    for (int i = 0; i <= rows; ++i) d.mesh.gluing.emplace_back(ids[i][n()], ids[i][0]);
    return {take(ids, 0), take(ids, static_cast<std::size_t>(rows))};
  }

  void rectangle(const std::vector<int>& waist) {
    const auto& r = *bp.rectangle;
    const double eps = bp.epsilon;
    const double d0 = std::sqrt(eps) * bp.tubes.front().waist / n();
    // Window end points carry the Dirichlet condition, so at least one
    // interior vertex is needed for the rectangle to couple at all.
    int segments = static_cast<int>(std::floor(r.c / d0 + 1e-9));
    if (segments < kMinWindowSegments)
      throw RefinementRequired("attachment interval c = " + std::to_string(r.c) + " spans fewer than " +
                               std::to_string(kMinWindowSegments) + " waist elements; decrease h");
    segments = std::min(segments, n() / 2);
    const double c = segments * d0;
    const double x0 = 0.5 * (r.a - c);
    const double Hx = r.a / 12.0;
    const double Hy = std::min(r.b / 24.0, 8.0 * Hx);

    std::vector<double> xs;
    const auto left = graded_offsets(d0, x0, Hx);
    for (auto it = left.rbegin(); it != left.rend(); ++it) xs.push_back(x0 - *it);
    for (int k = 1; k <= segments; ++k) xs.push_back(x0 + k * d0);
    const auto right = graded_offsets(d0, r.a - x0 - c, Hx);
    for (std::size_t k = 1; k < right.size(); ++k) xs.push_back(x0 + c + right[k]);
    xs.front() = 0.0;
    xs.back() = r.a;
    const auto ys = graded_offsets(d0, r.b, Hy);

    const int patch = add_patch(d.mesh, "rectangle");
    const Matrix2d g = Matrix2d::Identity() / eps;
    const auto ids = structured_grid(d, patch, xs, ys, [&](const Vector2d&) { return g; });
    const std::size_t i0 = left.size() - 1;
    const std::size_t nx = xs.size() - 1, ny = ys.size() - 1;

    std::vector<int> window, attach;
    for (int k = 0; k <= segments; ++k) {
      window.push_back(ids[i0 + static_cast<std::size_t>(k)][0]);
      attach.push_back(waist[static_cast<std::size_t>(k)]);
    }
    glue_rings(d.mesh, window, attach, "rectangle attachment");

    std::vector<int> path;
    for (std::size_t i = 0; i <= i0; ++i) path.push_back(ids[i][0]);
    tag_path(d.mesh, path, kRectangleTag, false);
    path.clear();
    for (std::size_t i = i0 + static_cast<std::size_t>(segments); i <= nx; ++i) path.push_back(ids[i][0]);
    tag_path(d.mesh, path, kRectangleTag, false);
    path.clear();
    for (std::size_t j = 0; j <= ny; ++j) path.push_back(ids[nx][j]);
    tag_path(d.mesh, path, kRectangleTag, false);
    path.clear();
    for (std::size_t i = nx + 1; i-- > 0;) path.push_back(ids[i][ny]);
    tag_path(d.mesh, path, kRectangleTag, false);
    path.clear();
    for (std::size_t j = ny + 1; j-- > 0;) path.push_back(ids[0][j]);
    tag_path(d.mesh, path, kRectangleTag, false);

    std::vector<int> rest;
    for (int k = segments; k < n(); ++k) rest.push_back(waist[static_cast<std::size_t>(k)]);
    rest.push_back(waist[0]);
    tag_path(d.mesh, rest, kBoundaryTag, false);
  }

  MeshedDomain build() {
    const std::size_t N = bp.size();
    const auto hub_ports = box("hub", bp.hub.box, plan.band_rows[0]);
    const auto z = tube("Z", bp.tubes[0], plan.tube_rows[0]);
    glue_rings(d.mesh, z.wide, hub_ports[0], "Z / hub port 0");
    if (bp.rectangle)
      rectangle(z.waist);
    else
      tag_path(d.mesh, z.waist, kBoundaryTag, true);

    for (std::size_t i = 1; i < N; ++i) {
      const std::string id = std::to_string(i);
      const auto cap_ports = box("cap" + id, bp.caps[i - 1].box, plan.band_rows[i]);
      const auto a = tube("Z" + id + "/cap", bp.tubes[i], plan.tube_rows[i]);
      const auto b = tube("Z" + id + "/hub", bp.tubes[i], plan.tube_rows[i]);
      glue_rings(d.mesh, a.waist, b.waist, "Z" + id + " waist");
      glue_rings(d.mesh, a.wide, cap_ports[0], "Z" + id + " / cap" + id);
      glue_rings(d.mesh, b.wide, hub_ports[i], "Z" + id + " / hub port " + id);
    }
    compact(d.mesh);
    validate(d.mesh, d.metric);
    return std::move(d);
  }
};

}  // namespace detail

inline MeshedDomain mesh_blueprint(const surface::SurfaceBlueprint& bp, const MeshPlan& plan) {
  if (plan.tube_rows.size() != bp.tubes.size() || plan.band_rows.size() != bp.caps.size() + 1 ||
      plan.layout.hub_side != bp.hub.box.side_units || plan.layout.cap_sides.size() != bp.caps.size())
    throw ValidationError("mesh plan does not match blueprint");
  for (std::size_t i = 0; i < bp.caps.size(); ++i)
    if (plan.layout.cap_sides[i] != bp.caps[i].box.side_units) throw ValidationError("mesh plan does not match blueprint");
  if (plan.n_theta < 8 || plan.n_theta % 8 != 0) throw RefinementRequired("n_theta must be a multiple of 8, at least 8");
  return detail::BlueprintMesher{bp, plan, {}}.build();
}

inline MeshedDomain mesh_blueprint(const surface::SurfaceBlueprint& bp, double h = kDefaultMeshH) {
  return mesh_blueprint(bp, plan_mesh(bp, h));
}

}  // namespace prescribe::fem
