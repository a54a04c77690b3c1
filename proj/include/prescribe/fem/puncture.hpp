#pragma once

// Domains with a small round hole, meshed as an O-grid: rays from the hole
// centre to the outer boundary, radial nodes spaced geometrically so cells
// stay close to square from the hole edge outwards.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "prescribe/fem/assemble.hpp"
#include "prescribe/fem/eigensolver.hpp"

namespace prescribe::fem {

inline constexpr const char* kHoleTag = "hole";
inline constexpr const char* kOuterTag = "outer";

/// Outer domain centred at the origin: disk of radius `size` or square of side `size`.
struct PunctureBase {
  enum class Kind { Disk, Square } kind = Kind::Disk;
  double size = 1.0;

  static PunctureBase disk(double r) { return {Kind::Disk, r}; }
  static PunctureBase square(double side) { return {Kind::Square, side}; }

  /// Distance from p to the outer boundary along the unit direction d.
  double ray_length(const Vector2d& p, const Vector2d& d) const {
    if (kind == Kind::Disk) {
      const double pd = p.dot(d);
      return -pd + std::sqrt(pd * pd - p.squaredNorm() + size * size);
    }
    const double half = 0.5 * size;
    double t = INFINITY;
    for (int axis = 0; axis < 2; ++axis) {
      if (d(axis) > 0) t = std::min(t, (half - p(axis)) / d(axis));
      if (d(axis) < 0) t = std::min(t, (-half - p(axis)) / d(axis));
    }
    return t;
  }

  double inner_distance(const Vector2d& p) const {
    if (kind == Kind::Disk) return size - p.norm();
    return 0.5 * size - p.cwiseAbs().maxCoeff();
  }
};

struct PunctureOptions {
  int angular = 192;  ///< vertices around the hole, multiple of 8
  SolverOptions solver;
};

struct PunctureRow {
  double epsilon = 0.0;
  double h = 0.0;  ///< largest angular spacing (at the outer boundary)
  int dofs = 0;
  std::vector<double> lambda;
  std::vector<double> residuals;
};

/// Base minus the closed disk of radius eps around `center`.
/// Boundary tags: "hole" and "outer".
inline MeshedDomain mesh_punctured(const PunctureBase& base, const Vector2d& center, double eps, int angular) {
  if (!(base.size > 0.0)) throw ValidationError("puncture base size must be positive");
  if (!(eps > 0.0)) throw ValidationError("hole radius must be positive");
  if (angular < 16 || angular % 8 != 0)
    throw RefinementRequired("hole under-resolved: need a multiple of 8, at least 16 vertices around it");
  if (!(base.inner_distance(center) > 2.0 * eps))
    throw ValidationError("hole of radius " + std::to_string(eps) + " does not fit inside the base");

  const double dphi = 2.0 * std::numbers::pi / angular;
  std::vector<Vector2d> dirs;
  std::vector<double> reach;
  for (int a = 0; a < angular; ++a) {
    const Vector2d d{std::cos(a * dphi), std::sin(a * dphi)};
    dirs.push_back(d);
    reach.push_back(base.ray_length(center, d));
  }
  const double r_max = *std::max_element(reach.begin(), reach.end());
  const int radial = std::max(4, static_cast<int>(std::ceil(std::log(r_max / eps) / dphi)));

  MeshedDomain d;
  const int patch = add_patch(d.mesh, "punctured");
  std::vector<std::vector<int>> id(static_cast<std::size_t>(angular), std::vector<int>(static_cast<std::size_t>(radial) + 1));
  for (int a = 0; a < angular; ++a) {
    const double ratio = reach[static_cast<std::size_t>(a)] / eps;
    for (int j = 0; j <= radial; ++j) {
      const double rho = j == radial ? reach[static_cast<std::size_t>(a)] : eps * std::pow(ratio, double(j) / radial);
      id[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)] =
          add_vertex(d.mesh, center + rho * dirs[static_cast<std::size_t>(a)], patch);
    }
  }
  for (int a = 0; a < angular; ++a) {
    const auto& c0 = id[static_cast<std::size_t>(a)];
    const auto& c1 = id[static_cast<std::size_t>((a + 1) % angular)];
    for (std::size_t j = 0; j < static_cast<std::size_t>(radial); ++j) {
      add_triangle(d, c0[j], c1[j], c1[j + 1], flat_metric);
      add_triangle(d, c0[j], c1[j + 1], c0[j + 1], flat_metric);
    }
  }
  std::vector<int> hole, outer;
  for (int a = 0; a < angular; ++a) {
    hole.push_back(id[static_cast<std::size_t>(a)].front());
    outer.push_back(id[static_cast<std::size_t>(a)].back());
  }
  std::reverse(hole.begin(), hole.end());
  tag_path(d.mesh, hole, kHoleTag, true);
  tag_path(d.mesh, outer, kOuterTag, true);
  validate(d.mesh, d.metric);
  return d;
}

/// First k eigenvalues with Dirichlet on the outer boundary and `inner` on
/// the hole, one row per eps.
inline std::vector<PunctureRow> puncture_study(const PunctureBase& base, const Vector2d& center,
                                               const std::vector<double>& eps_list, BoundaryKind inner, int k,
                                               const PunctureOptions& opt = {}) {
  if (eps_list.empty()) throw ValidationError("puncture study needs at least one hole radius");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw ValidationError("hole radii must be strictly decreasing");
  std::vector<PunctureRow> rows;
  for (double eps : eps_list) {
    const auto dom = mesh_punctured(base, center, eps, opt.angular);
    const auto sp = assemble(dom);
    BoundaryCondition bc;
    bc.set(kOuterTag, BoundaryKind::Dirichlet).set(kHoleTag, inner);
    const auto r = solve_smallest(sp, bc, k, opt.solver);
    double reach = 0.0;
    for (int a = 0; a < opt.angular; ++a) {
      const double phi = 2.0 * std::numbers::pi * a / opt.angular;
      reach = std::max(reach, base.ray_length(center, {std::cos(phi), std::sin(phi)}));
    }
    rows.push_back({eps, 2.0 * std::numbers::pi * reach / opt.angular, sp.dofs.n_dofs, r.eigenvalues, r.residuals});
  }
  return rows;
}

}  // namespace prescribe::fem
