#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "prescribe/surface_model.hpp"

using namespace prescribe;
using namespace prescribe::surface;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
double simpson(F&& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Conductance of a radially symmetric tube: 1 / integral of dx / circumference.
double energy_oracle(double l, double A, double B, int copies) {
  const double L = std::acosh(1.0 / l);
  const double resistance = copies * simpson([&](double x) { return 1.0 / (l * std::cosh(x)); }, 0.0, L);
  return (B - A) * (B - A) / resistance;
}

graph::StarWeights n2_weights() { return {12.0, {4.0}, {8.0, 2.0}}; }

}  // namespace

TEST(TubeGeometry, QuadratureOracle) {
  for (double l : {0.6, 0.1, 0.01, 0.9}) {
    const auto g = tube_geometry(l);
    EXPECT_NEAR(g.chart_length, std::acosh(1.0 / l), 1e-14);
    EXPECT_NEAR(g.area, simpson([&](double x) { return l * std::cosh(x); }, 0.0, g.chart_length), 1e-10);
  }
  EXPECT_NEAR(tube_geometry(0.6).area, 0.8, 1e-12);
  EXPECT_NEAR(tube_geometry(0.6).chart_length, 1.0986, 1e-4);
  EXPECT_NEAR(tube_geometry(0.1).area, 0.99499, 1e-5);
}

TEST(TubeGeometry, DegeneratesNearUnitWaist) {
  const auto g = tube_geometry(1.0 - 1e-12);
  EXPECT_LT(g.chart_length, 1e-5);
  EXPECT_LT(g.area, 1e-5);
  EXPECT_THROW(tube_geometry(1.0), InfeasibleEpsilon);
  EXPECT_THROW(tube_geometry(1.5), InfeasibleEpsilon);
  EXPECT_THROW(tube_geometry(0.0), ValidationError);
}

TEST(Gudermannian, MatchesSechIntegral) {
  for (double x : {0.0, 0.3, 1.0, 3.0, 8.0})
    EXPECT_NEAR(gudermannian(x), simpson([](double t) { return 1.0 / std::cosh(t); }, 0.0, x), 1e-12);
}

TEST(HarmonicTubeEnergy, Examples) {
  EXPECT_DOUBLE_EQ(harmonic_tube_energy(0.1, 0.7, 0.7, 1), 0.0);
  EXPECT_NEAR(harmonic_tube_energy(0.1, 0.0, 1.0, 1), energy_oracle(0.1, 0.0, 1.0, 1), 1e-10);
  EXPECT_NEAR(harmonic_tube_energy(0.1, 0.0, 1.0, 1), 0.06801, 5e-5);
  EXPECT_NEAR(harmonic_tube_energy(0.1, 0.0, 1.0, 2), 0.03400, 5e-5);
  EXPECT_THROW(harmonic_tube_energy(1.0, 0.0, 1.0, 1), InfeasibleEpsilon);
  EXPECT_THROW(harmonic_tube_energy(0.1, 0.0, 1.0, 3), ValidationError);
}

TEST(HarmonicTubeEnergy, AgreesWithBoundaryValueOracle) {
  for (double l : {0.05, 0.3, 0.8})
    for (int copies : {1, 2})
      EXPECT_NEAR(harmonic_tube_energy(l, 0.2, -1.3, copies), energy_oracle(l, 0.2, -1.3, copies), 1e-9);
}

TEST(HarmonicTubeEnergy, ThinLimitIsMonotone) {
  // (1/eps) E(theta_i pi eps, A, B, 2) -> theta_i (B - A)^2.
  const double th = 3.0, A = 0.5, B = 2.0;
  const double limit = th * (B - A) * (B - A);
  double prev = 1e300;
  for (double eps : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
    const double err = std::abs(harmonic_tube_energy(th * kPi * eps, A, B, 2) / eps - limit);
    EXPECT_LT(err, prev);
    prev = err;
  }
  EXPECT_LT(prev / limit, 0.1);
}

TEST(Blueprint, N2Example) {
  const auto bp = blueprint_from_weights(n2_weights(), 0.01);
  ASSERT_EQ(bp.tubes.size(), 2u);
  EXPECT_NEAR(bp.tubes[0].waist, 6 * kPi * 0.01, 1e-15);
  EXPECT_EQ(bp.tubes[0].copies, 1);
  EXPECT_NEAR(bp.tubes[1].waist, 0.1257, 1e-4);
  EXPECT_EQ(bp.tubes[1].copies, 2);
  ASSERT_EQ(bp.caps.size(), 1u);
  const double l1 = 4 * kPi * 0.01;
  EXPECT_NEAR(bp.caps[0].target_area, 2.0 - std::sqrt(1.0 - l1 * l1), 1e-14);
  EXPECT_NEAR(bp.caps[0].target_area, 1.00794, 5e-5);
  EXPECT_NEAR(bp.caps[0].box.area(), bp.caps[0].target_area, 1e-12);
  EXPECT_NEAR(bp.hub.box.area(), bp.hub.target_area, 1e-12);
  EXPECT_EQ(bp.hub.n_ports, 2);
  EXPECT_NEAR(bp.disk_area(), 10.0, 1e-12);
  EXPECT_NEAR(bp.scaled_area(), 0.1, 1e-14);
}

TEST(Blueprint, SingleVertexHasOneTube) {
  const graph::StarWeights w{4.0, {}, {2.0}};
  const double eps = 0.02;
  const auto bp = blueprint_from_weights(w, eps);
  EXPECT_EQ(bp.tubes.size(), 1u);
  EXPECT_TRUE(bp.caps.empty());
  const double l = 2.0 * kPi * eps;
  EXPECT_NEAR(bp.hub.target_area, 2.0 - std::sqrt(1.0 - l * l), 1e-14);
  EXPECT_EQ(bp.hub.n_ports, 1);
}

TEST(Blueprint, InfeasibleEpsilon) {
  EXPECT_THROW(blueprint_from_weights(n2_weights(), 1.0), InfeasibleEpsilon);
  // Cap budget 0.3 - area(Z_1) is negative.
  const graph::StarWeights small{2.0, {0.3}, {8.0, 0.3}};
  try {
    blueprint_from_weights(small, 1e-3);
    FAIL();
  } catch (const InfeasibleEpsilon& e) {
    EXPECT_NE(std::string(e.what()).find("cap 1"), std::string::npos);
  }
}

TEST(Blueprint, FrozenLayoutKeepsBoxSides) {
  const auto bp = blueprint_from_weights(n2_weights(), 0.01);
  auto w = n2_weights();
  w.mu[0] *= 1.3;
  w.mu[1] *= 1.1;
  const auto moved = blueprint_from_weights(w, 0.01, layout_of(bp));
  EXPECT_EQ(moved.hub.box.side_units, bp.hub.box.side_units);
  EXPECT_EQ(moved.caps[0].box.side_units, bp.caps[0].box.side_units);
  EXPECT_NEAR(moved.disk_area(), w.mu[0] + w.mu[1], 1e-12);
}

TEST(BoxRealization, PortsFitOnFaces) {
  const BoxRealization lid{min_side_units(1), 0.5, 1};
  EXPECT_TRUE(lid.is_lid());
  EXPECT_EQ(lid.side(), 0.25);
  EXPECT_NEAR(lid.area(), 0.0625 + 0.5, 1e-15);
  for (int ports : {2, 3, 8, 9, 20}) {
    const int q = min_side_units(ports);
    const BoxRealization box{q, 0.5, ports};
    const auto slots = port_slots(box);
    ASSERT_EQ(static_cast<int>(slots.size()), ports);
    for (const auto& s : slots) {
      EXPECT_GE(s.col, 1);
      EXPECT_GE(s.row, 1);
      EXPECT_LE(s.col + kPortUnits, q - 1);
      EXPECT_LE(s.row + kPortUnits, q - 1);
    }
    for (std::size_t a = 0; a < slots.size(); ++a)
      for (std::size_t b = a + 1; b < slots.size(); ++b)
        if (slots[a].face == slots[b].face)
          EXPECT_TRUE(std::abs(slots[a].col - slots[b].col) >= 3 || std::abs(slots[a].row - slots[b].row) >= 3);
  }
}

TEST(ModelMatrices, SingleVertexClosedForm) {
  const graph::StarWeights w{4.0, {}, {2.0}};
  const double eps = 0.02;
  const auto bp = blueprint_from_weights(w, eps);
  const auto m = model_matrices(bp);
  const double l = 2.0 * kPi * eps;
  const double L = std::acosh(1.0 / l);
  const double G = 2.0 * std::atan(std::tanh(L / 2));
  EXPECT_NEAR(m.Q(0, 0), energy_oracle(l, 1.0, 0.0, 1), 1e-9);
  const double tube_mass = simpson([&](double x) {
    const double p = 2.0 * std::atan(std::tanh(x / 2)) / G;
    return p * p * l * std::cosh(x);
  }, 0.0, L);
  EXPECT_NEAR(m.M(0, 0), bp.hub.target_area + tube_mass, 1e-9);
}

TEST(ModelMatrices, TwoVertexConvergesToGraphPencil) {
  const auto w = n2_weights();
  const auto lp = graph::laplacian_pair(w);
  double prev_q = 1e300, prev_m = 1e300;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const auto m = model_matrices(blueprint_from_weights(w, eps));
    EXPECT_NEAR(m.Q(0, 1), m.Q(1, 0), 1e-15);
    EXPECT_NEAR(m.M(0, 1), m.M(1, 0), 1e-15);
    const double eq = ((m.Q / eps) - lp.Q).cwiseAbs().maxCoeff();
    const double em = (m.M - lp.M).cwiseAbs().maxCoeff();
    EXPECT_LT(eq, prev_q);
    EXPECT_LT(em, prev_m);
    prev_q = eq;
    prev_m = em;
  }
  EXPECT_LT(prev_q / lp.Q.cwiseAbs().maxCoeff(), 0.05);
  EXPECT_LT(prev_m / 8.0, 0.01);
}

TEST(ModelMatrices, PencilEigenvaluesApproachForwardSpectrum) {
  const graph::TargetSpectrum t{{1.0, 3.0}};
  const auto w = graph::normalize_for_construction(graph::prescribe_weights(t));
  double prev = 1e300;
  for (double eps : {1e-3, 1e-4, 1e-5}) {
    const auto v = model_eigenvalues(blueprint_from_weights(w, eps));
    double miss = 0.0;
    for (std::size_t k = 0; k < 2; ++k) miss = std::max(miss, std::abs(v[k] - t.a[k]) / t.a[k]);
    EXPECT_LT(miss, prev);
    prev = miss;
  }
  EXPECT_LT(prev, 0.05);
}

TEST(AttachRectangle, DirichletGroundState) {
  const RectanglePatch r{1.0, 2.0, 0.1, 1.0};
  EXPECT_NEAR(r.dirichlet_lambda1(), 12.337, 1e-3);
  EXPECT_NEAR(r.area(), 2.0, 0.0);
}

TEST(AttachRectangle, IdentityAtCurrentArea) {
  const auto bp = blueprint_from_weights(n2_weights(), 0.01);
  const auto out = attach_rectangle(bp, bp.scaled_area(), 10.0);
  EXPECT_FALSE(out.rectangle.has_value());
  EXPECT_DOUBLE_EQ(out.scaled_area(), bp.scaled_area());
}

TEST(AttachRectangle, ThinRectangleMeetsGapBound) {
  const auto bp = blueprint_from_weights(n2_weights(), 0.01);
  const double M = 100.0;
  const auto out = attach_rectangle(bp, bp.scaled_area() + 4.0, M);
  ASSERT_TRUE(out.rectangle.has_value());
  const auto& r = *out.rectangle;
  EXPECT_NEAR(r.a * r.b, 4.0, 1e-12);
  EXPECT_GE(r.dirichlet_lambda1(), 2.0 * M * (1.0 - 1e-12));
  // The smaller root of the quadratic pins the bound with equality.
  EXPECT_NEAR(r.dirichlet_lambda1(), 2.0 * M, 1e-9);
  EXPECT_LE(r.c, 0.1 * r.a + 1e-15);
  EXPECT_LE(r.c, 1.0 / M + 1e-15);
  EXPECT_NEAR(out.scaled_area(), bp.scaled_area() + 4.0, 1e-12);
  EXPECT_LT(r.c, 0.5 * bp.scaled_boundary_length());
}

TEST(AttachRectangle, IntervalShrinksWithGapBound) {
  const auto bp = blueprint_from_weights(n2_weights(), 0.01);
  double prev = INFINITY;
  for (double M : {30.0, 120.0, 480.0}) {
    const double c = attach_rectangle(bp, bp.scaled_area() + 1.0, M).rectangle->c;
    EXPECT_LT(c, prev);
    prev = c;
  }
}

TEST(AttachRectangle, SmallAreaUsesSquare) {
  const auto bp = blueprint_from_weights(n2_weights(), 0.01);
  const auto out = attach_rectangle(bp, bp.scaled_area() + 0.25, 10.0);
  EXPECT_NEAR(out.rectangle->a, 0.5, 1e-14);
  EXPECT_NEAR(out.rectangle->b, 0.5, 1e-14);
}

TEST(AttachRectangle, Errors) {
  const auto bp = blueprint_from_weights(n2_weights(), 0.01);
  EXPECT_THROW(attach_rectangle(bp, bp.scaled_area() * 0.5, 10.0), InfeasibleArea);
  EXPECT_THROW(attach_rectangle(bp, bp.scaled_area() + 1.0, 0.0), ValidationError);
  EXPECT_THROW(attach_rectangle(bp, bp.scaled_area() + 1e6, 1e6), InfeasibleArea);
}
