#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "prescribe/fem/mesh.hpp"

namespace prescribe::fem {

namespace detail {

inline void check_h(double h) {
  if (!(std::isfinite(h) && h > 0.0)) throw ValidationError("mesh size h must be positive");
}

inline int cells_for(double length, double h, const char* what) {
  const int n = static_cast<int>(std::lround(length / h));
  if (n < 2)
    throw RefinementRequired(std::string(what) + ": h = " + std::to_string(h) + " leaves fewer than 2 cells across");
  return n;
}

inline std::vector<int> column(const std::vector<std::vector<int>>& ids, std::size_t i) { return ids[i]; }

inline std::vector<int> row(const std::vector<std::vector<int>>& ids, std::size_t j) {
  std::vector<int> r;
  for (const auto& c : ids) r.push_back(c[j]);
  return r;
}

/// Periodic strip [x0,x1] x [0,1) with n_theta columns and metric diag(1, w(x)^2).
template <class Width>
MeshedDomain periodic_strip(const std::vector<double>& xs, int n_theta, Width&& width, const std::string& patch,
                            const std::string& tag0, const std::string& tag1) {
  MeshedDomain d;
  const int p = add_patch(d.mesh, patch);
  const auto ts = uniform_nodes(0.0, 1.0, n_theta);
  auto metric = [&](const Vector2d& c) {
    const double w = width(c.x());
    return Matrix2d{{1.0, 0.0}, {0.0, w * w}};
  };
  const auto ids = structured_grid(d, p, xs, ts, metric);
  for (std::size_t i = 0; i < xs.size(); ++i) d.mesh.gluing.emplace_back(ids[i][static_cast<std::size_t>(n_theta)], ids[i][0]);
  auto ring = [&](std::size_t i) {
    std::vector<int> r(ids[i].begin(), ids[i].begin() + n_theta);
    return r;
  };
  tag_path(d.mesh, ring(0), tag0, true);
  tag_path(d.mesh, ring(xs.size() - 1), tag1, true);
  return d;
}

}  // namespace detail

/// Structured right-triangle mesh of [0,a] x [0,b], flat metric.
/// Sides are tagged bottom, right, top, left.
inline MeshedDomain mesh_rectangle(double a, double b, double h) {
  detail::check_h(h);
  if (!(a > 0.0 && b > 0.0)) throw ValidationError("rectangle sides must be positive");
  const int nx = detail::cells_for(a, h, "rectangle");
  const int ny = detail::cells_for(b, h, "rectangle");
  MeshedDomain d;
  const int p = add_patch(d.mesh, "rectangle");
  const auto ids = structured_grid(d, p, uniform_nodes(0.0, a, nx), uniform_nodes(0.0, b, ny), flat_metric);
  tag_path(d.mesh, detail::row(ids, 0), "bottom", false);
  tag_path(d.mesh, detail::column(ids, static_cast<std::size_t>(nx)), "right", false);
  tag_path(d.mesh, detail::row(ids, static_cast<std::size_t>(ny)), "top", false);
  tag_path(d.mesh, detail::column(ids, 0), "left", false);
  return d;
}

/// Concentric-ring mesh of the disk of radius r: ring k carries 6k vertices,
/// neighbouring rings are zipped by angle. Outer polygon tagged "outer".
inline MeshedDomain mesh_disk(double r, double h) {
  detail::check_h(h);
  if (!(r > 0.0)) throw ValidationError("disk radius must be positive");
  const int rings = detail::cells_for(r, h, "disk");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  MeshedDomain d;
  const int p = add_patch(d.mesh, "disk");
  std::vector<int> prev{add_vertex(d.mesh, {0.0, 0.0}, p)};
  for (int k = 1; k <= rings; ++k) {
    const int n = 6 * k;
    const double rad = r * k / rings;
    std::vector<int> cur;
    for (int i = 0; i < n; ++i) {
      const double t = two_pi * i / n;
      cur.push_back(add_vertex(d.mesh, {rad * std::cos(t), rad * std::sin(t)}, p));
    }
    if (prev.size() == 1) {
      for (int i = 0; i < n; ++i) add_triangle(d, prev[0], cur[i], cur[(i + 1) % n], flat_metric);
    } else {
      const int m = static_cast<int>(prev.size());
      int i = 0, j = 0;
      while (i < m || j < n) {
        const double next_a = static_cast<double>(i + 1) / m;
        const double next_b = static_cast<double>(j + 1) / n;
        if (j < n && (i == m || next_b <= next_a)) {
          add_triangle(d, prev[i % m], cur[j], cur[(j + 1) % n], flat_metric);
          ++j;
        } else {
          add_triangle(d, prev[i % m], cur[j % n], prev[(i + 1) % m], flat_metric);
          ++i;
        }
      }
    }
    prev = std::move(cur);
  }
  tag_path(d.mesh, prev, "outer", true);
  return d;
}

/// Collar [a,b] x R/Z with metric dr^2 + (l cosh r)^2 dtheta^2.
/// Ends tagged "start" (r = a) and "end" (r = b).
inline MeshedDomain mesh_collar(double a, double b, double l, double h) {
  detail::check_h(h);
  if (!(b > a) || !(l > 0.0)) throw ValidationError("collar needs a < b and l > 0");
  const int nr = detail::cells_for(b - a, h, "collar");
  const int nt = std::max(8, static_cast<int>(std::ceil(1.0 / h)));
  return detail::periodic_strip(uniform_nodes(a, b, nr), nt, [l](double x) { return l * std::cosh(x); }, "collar",
                                "start", "end");
}

/// Annulus r0 <= |z| <= r1 in polar chart (r, phi / 2pi), metric diag(1, (2 pi r)^2).
inline MeshedDomain mesh_annulus(double r0, double r1, double h) {
  detail::check_h(h);
  if (!(r0 > 0.0 && r1 > r0)) throw ValidationError("annulus needs 0 < r0 < r1");
  const int nr = detail::cells_for(r1 - r0, h, "annulus");
  const int nt = std::max(16, static_cast<int>(std::ceil(2.0 * std::numbers::pi * r1 / h)));
  return detail::periodic_strip(uniform_nodes(r0, r1, nr), nt,
                                [](double r) { return 2.0 * std::numbers::pi * r; }, "annulus", "inner", "outer");
}

}  // namespace prescribe::fem
