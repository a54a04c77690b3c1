#pragma once

// Symbolic description of the glued disk metric built from star weights.
//
// The disk is assembled from
//   * one boundary tube Z: [0, arccosh(1/l)] x R/Z with metric
//     dx^2 + (l cosh x)^2 dtheta^2, waist l = theta*pi*eps/2 on the boundary;
//   * for every leaf i a neck made of two copies of such a tube with waist
//     l_i = theta_i*pi*eps, glued waist to waist;
//   * closed "cap" patches for the leaves and a "hub" patch with N ports,
//     each port a circle of circumference 1.
// Caps and hub are realized as piecewise-flat box surfaces (s x s x h) with
// square ports of side 1/4 cut out of the top and bottom faces. Areas are
// matched exactly through the box height.
//
// All lengths and areas here refer to the unscaled metric h_eps. The metric
// of interest is eps * h_eps: areas multiply by eps, eigenvalues divide by eps.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "prescribe/error.hpp"
#include "prescribe/graph_spectrum.hpp"

namespace prescribe::surface {

using graph::StarWeights;

/// gd(x) = integral_0^x sech = 2 atan(tanh(x/2)).
inline double gudermannian(double x) { return 2.0 * std::atan(std::tanh(0.5 * x)); }

struct TubeGeometry {
  double waist = 0.0;
  double chart_length = 0.0;  ///< arccosh(1/waist)
  double area = 0.0;          ///< sqrt(1 - waist^2)
};

inline TubeGeometry tube_geometry(double waist) {
  if (!(waist > 0.0)) throw ValidationError("tube waist must be positive");
  if (!(waist < 1.0))
    throw InfeasibleEpsilon("tube waist " + std::to_string(waist) + " >= 1: tube degenerates (decrease epsilon)");
  return {waist, std::acosh(1.0 / waist), std::sqrt((1.0 - waist) * (1.0 + waist))};
}

/// Energy of the rotationally symmetric harmonic function with end values A
/// (waist side) and B (wide end) on `copies` tubes in series.
inline double harmonic_tube_energy(double waist, double A, double B, int copies) {
  if (copies != 1 && copies != 2) throw ValidationError("tube copies must be 1 or 2");
  const auto g = tube_geometry(waist);
  return (B - A) * (B - A) * waist / (copies * gudermannian(g.chart_length));
}

// ---------------------------------------------------------------------------
// Layout of the box realization.

inline constexpr double kLayoutUnit = 0.125;  ///< ports sit on a 1/8 lattice
inline constexpr int kPortUnits = 2;          ///< port side 1/4, perimeter 1
inline constexpr double kMinBoxHeight = 0.125;

struct PortSlot {
  int face = 0;  ///< 0 bottom, 1 top
  int col = 0;   ///< lower-left corner in layout units
  int row = 0;
};

/// Closed box surface s x s x h with `ports` square holes of perimeter 1.
/// A single-port box of side 1/4 is a lid shape: the port is the whole bottom face.
struct BoxRealization {
  int side_units = 4;
  double height = kMinBoxHeight;
  int ports = 1;

  double side() const { return side_units * kLayoutUnit; }
  bool is_lid() const { return side_units == kPortUnits; }
  double area() const {
    const double s = side();
    return 2.0 * s * s + 4.0 * s * height - ports * (kPortUnits * kLayoutUnit) * (kPortUnits * kLayoutUnit);
  }
};

inline int slots_per_row(int side_units) { return side_units < 4 ? 0 : (side_units - 4) / 3 + 1; }

inline bool side_fits(int side_units, int ports) {
  if (side_units == kPortUnits) return ports == 1;
  return side_units >= 4 && 2 * slots_per_row(side_units) * slots_per_row(side_units) >= ports;
}

inline int min_side_units(int ports) {
  int q = ports == 1 ? kPortUnits : 4;
  while (!side_fits(q, ports)) ++q;
  return q;
}

/// Port positions: bottom face first, then top, row-major, centred on the face.
inline std::vector<PortSlot> port_slots(const BoxRealization& box) {
  if (box.is_lid()) return {PortSlot{0, 0, 0}};
  const int per = slots_per_row(box.side_units);
  const int span = 3 * per - 1;
  const int start = (box.side_units - span) / 2;
  std::vector<PortSlot> out;
  for (int k = 0; k < box.ports; ++k) {
    const int face = k / (per * per);
    const int local = k % (per * per);
    out.push_back({face, start + 3 * (local % per), start + 3 * (local / per)});
  }
  return out;
}

inline double box_area_floor(int ports) {
  return BoxRealization{min_side_units(ports), kMinBoxHeight, ports}.area();
}

/// Box of exactly `target_area`; the side is frozen when given. Single-port
/// boxes default to the lid shape (lowest area floor), others to a roughly
/// cube-shaped box.
inline BoxRealization realize_box(double target_area, int ports, const std::string& budget,
                                  std::optional<int> frozen_side = std::nullopt) {
  const int q_min = min_side_units(ports);
  const double holes = ports * 0.0625;
  auto height_for = [&](int q) {
    const double s = q * kLayoutUnit;
    return (target_area + holes - 2.0 * s * s) / (4.0 * s);
  };
  int q = q_min;
  if (frozen_side) {
    if (!side_fits(*frozen_side, ports)) throw ValidationError(budget + ": frozen box side does not fit its ports");
    q = *frozen_side;
  } else if (ports == 1) {
    q = kPortUnits;
  } else {
    const double cube_side = std::sqrt(std::max(target_area + holes, 0.0) / 6.0);
    q = std::max(q_min, static_cast<int>(std::lround(cube_side / kLayoutUnit)));
    while (!side_fits(q, ports)) ++q;
    while (q > q_min && height_for(q) < kMinBoxHeight) {
      --q;
      while (q > q_min && !side_fits(q, ports)) --q;
    }
  }
  const double h = height_for(q);
  if (!(h >= kMinBoxHeight))
    throw InfeasibleEpsilon(budget + " area " + std::to_string(target_area) + " is below its floor " +
                            std::to_string(BoxRealization{q, kMinBoxHeight, ports}.area()));
  return {q, h, ports};
}

// ---------------------------------------------------------------------------

enum class TubeRole { Boundary, Spoke };

struct TubeSpec {
  TubeRole role = TubeRole::Boundary;
  int spoke = 0;  ///< leaf index 1..N-1, 0 for the boundary tube
  double waist = 0.0;
  double chart_length = 0.0;
  int copies = 1;
  double area_per_copy = 0.0;
};

struct CapSpec {
  int spoke = 1;
  double target_area = 0.0;
  BoxRealization box;
};

struct HubSpec {
  double target_area = 0.0;
  int n_ports = 1;
  BoxRealization box;
};

/// Flat rectangle [0,a] x [0,b] (in the eps-scaled metric) glued along an
/// interval of length c of its a-side to the boundary circle.
struct RectanglePatch {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double gap = 0.0;  ///< requested lower bound M for the spectral gap
  double area() const { return a * b; }
  double dirichlet_lambda1() const { return std::numbers::pi * std::numbers::pi * (1.0 / (a * a) + 1.0 / (b * b)); }
};

struct SurfaceBlueprint {
  StarWeights weights;
  double epsilon = 0.0;
  std::vector<TubeSpec> tubes;  ///< tubes[0] boundary, tubes[i] spoke i
  std::vector<CapSpec> caps;    ///< caps[i-1] for leaf i
  HubSpec hub;
  std::optional<RectanglePatch> rectangle;

  std::size_t size() const { return weights.size(); }

  /// Area of the disk part under h_eps (equals sum mu).
  double disk_area() const {
    double a = hub.box.area();
    for (const auto& c : caps) a += c.box.area();
    for (const auto& t : tubes) a += t.copies * t.area_per_copy;
    return a;
  }
  /// Area under eps * h_eps, rectangle included.
  double scaled_area() const { return epsilon * disk_area() + (rectangle ? rectangle->area() : 0.0); }
  /// Length of the boundary circle under eps * h_eps.
  double scaled_boundary_length() const { return std::sqrt(epsilon) * tubes.front().waist; }
};

/// Box sides to keep fixed when rebuilding a blueprint for nearby weights.
struct BoxLayout {
  int hub_side = 0;
  std::vector<int> cap_sides;
};

inline BoxLayout layout_of(const SurfaceBlueprint& bp) {
  BoxLayout l{bp.hub.box.side_units, {}};
  for (const auto& c : bp.caps) l.cap_sides.push_back(c.box.side_units);
  return l;
}

inline SurfaceBlueprint blueprint_from_weights(const StarWeights& w, double epsilon,
                                               const std::optional<BoxLayout>& layout = std::nullopt) {
  graph::validate(w);
  if (!(std::isfinite(epsilon) && epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  const std::size_t n = w.size();
  if (layout && layout->cap_sides.size() + 1 != n) throw ValidationError("box layout does not match weights");
  constexpr double pi = std::numbers::pi;

  SurfaceBlueprint bp;
  bp.weights = w;
  bp.epsilon = epsilon;

  auto make_tube = [](TubeRole role, int spoke, double waist, int copies) {
    const auto g = tube_geometry(waist);
    return TubeSpec{role, spoke, waist, g.chart_length, copies, g.area};
  };
  bp.tubes.push_back(make_tube(TubeRole::Boundary, 0, w.theta * pi * epsilon / 2.0, 1));
  for (std::size_t i = 1; i < n; ++i)
    bp.tubes.push_back(make_tube(TubeRole::Spoke, static_cast<int>(i), w.theta_i[i - 1] * pi * epsilon, 2));

  double hub_area = w.mu[0] - bp.tubes[0].area_per_copy;
  for (std::size_t i = 1; i < n; ++i) {
    const double cap_area = w.mu[i] - bp.tubes[i].area_per_copy;
    hub_area -= bp.tubes[i].area_per_copy;
    const std::string budget = "cap " + std::to_string(i) + " (mu_" + std::to_string(i) + " - area(Z_" +
                               std::to_string(i) + "))";
    std::optional<int> side;
    if (layout) side = layout->cap_sides[i - 1];
    bp.caps.push_back({static_cast<int>(i), cap_area, realize_box(cap_area, 1, budget, side)});
  }
  std::optional<int> hub_side;
  if (layout) hub_side = layout->hub_side;
  bp.hub = {hub_area, static_cast<int>(n),
            realize_box(hub_area, static_cast<int>(n), "hub (mu_0 - area(Z) - sum area(Z_i))", hub_side)};
  return bp;
}

/// Largest epsilon keeping every waist below `max_waist`.
inline double epsilon_for_waist(const StarWeights& w, double max_waist) {
  double widest = w.theta / 2.0;
  for (double t : w.theta_i) widest = std::max(widest, t);
  return max_waist / (std::numbers::pi * widest);
}

// ---------------------------------------------------------------------------
// Restriction of the Dirichlet form and L2 product to the model space
// (constant on caps and hub, harmonic along the tubes).

struct ModelPencil {
  Eigen::MatrixXd Q;  ///< energy, unscaled metric
  Eigen::MatrixXd M;  ///< L2 Gram matrix, unscaled metric
};

namespace detail {

template <class F>
double tube_integral(const TubeSpec& t, F&& profile_weight) {
  auto integrand = [&](double x) { return profile_weight(x) * t.waist * std::cosh(x); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t.chart_length, 12, 1e-13);
}

}  // namespace detail

inline ModelPencil model_matrices(const SurfaceBlueprint& bp) {
  const auto n = static_cast<Eigen::Index>(bp.size());
  ModelPencil out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};

  // Boundary tube: profile rises from 0 on the boundary to x_0 at the hub.
  {
    const auto& t = bp.tubes[0];
    const double G = gudermannian(t.chart_length);
    out.Q(0, 0) += harmonic_tube_energy(t.waist, 0.0, 1.0, 1);
    out.M(0, 0) += detail::tube_integral(t, [&](double x) {
      const double p = gudermannian(x) / G;
      return p * p;
    });
  }
  out.M(0, 0) += bp.hub.box.area();

  for (Eigen::Index i = 1; i < n; ++i) {
    const auto& t = bp.tubes[static_cast<std::size_t>(i)];
    const double G = gudermannian(t.chart_length);
    const double e = harmonic_tube_energy(t.waist, 0.0, 1.0, 2);
    out.Q(0, 0) += e;
    out.Q(i, i) += e;
    out.Q(0, i) -= e;
    out.Q(i, 0) -= e;
    // Weight of x_i on the cap-side copy; the hub-side copy carries 1 - phi.
    auto phi = [&](double x) { return 0.5 + 0.5 * gudermannian(x) / G; };
    const double sq = detail::tube_integral(t, [&](double x) { return phi(x) * phi(x); });
    const double co = detail::tube_integral(t, [&](double x) { return (1.0 - phi(x)) * (1.0 - phi(x)); });
    const double cross = detail::tube_integral(t, [&](double x) { return phi(x) * (1.0 - phi(x)); });
    out.M(i, i) += sq + co;
    out.M(0, 0) += sq + co;
    out.M(0, i) += 2.0 * cross;
    out.M(i, 0) += 2.0 * cross;
    out.M(i, i) += bp.caps[static_cast<std::size_t>(i - 1)].box.area();
  }
  return out;
}

/// Eigenvalues of the model pencil under eps * h_eps (i.e. divided by eps).
inline std::vector<double> model_eigenvalues(const SurfaceBlueprint& bp) {
  const auto m = model_matrices(bp);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(m.Q, m.M, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (Eigen::Index k = 0; k < m.Q.rows(); ++k) out.push_back(es.eigenvalues()(k) / bp.epsilon);
  return out;
}

// ---------------------------------------------------------------------------

/// Longest rectangle aspect ratio b/a accepted for meshing.
inline constexpr double kMaxRectangleAspect = 1e4;

/// Grows the eps-scaled area to `total_area` with a flat rectangle whose
/// Dirichlet ground state pi^2 (1/a^2 + 1/b^2) is at least 2 * gap.
inline SurfaceBlueprint attach_rectangle(const SurfaceBlueprint& bp, double total_area, double gap) {
  if (!(gap > 0.0)) throw ValidationError("attach_rectangle: gap bound must be positive");
  const double current = bp.epsilon * bp.disk_area();
  const double extra = total_area - current;
  if (std::abs(extra) <= 1e-12 * total_area) {
    SurfaceBlueprint out = bp;
    out.rectangle.reset();
    return out;
  }
  if (!(extra > 0.0))
    throw InfeasibleArea("attach_rectangle: target area " + std::to_string(total_area) +
                         " is below the current area " + std::to_string(current));

  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  double a = std::sqrt(extra);
  if (gap * extra > pi2) {
    // Thin side from pi^2 (1/u + u/R^2) = 2 gap with u = a^2, smaller root.
    const double u = extra * (gap * extra - std::sqrt(gap * gap * extra * extra - pi2 * pi2)) / pi2;
    a = std::sqrt(u);
  }
  const double b = extra / a;
  if (b / a > kMaxRectangleAspect)
    throw InfeasibleArea("attach_rectangle: rectangle aspect " + std::to_string(b / a) +
                         " exceeds the meshable limit; lower the gap bound or the target area");

  SurfaceBlueprint out = bp;
  // Harmonic blend keeps c below half the boundary circle and strictly
  // decreasing in the gap bound.
  const double c_hat = std::min(0.1 * a, 1.0 / gap);
  const double c = 1.0 / (1.0 / c_hat + 2.0 / bp.scaled_boundary_length());
  out.rectangle = RectanglePatch{a, b, c, gap};
  return out;
}

}  // namespace prescribe::surface
