#include <gtest/gtest.h>

#include <cmath>

#include "prescribe/refine.hpp"

using namespace prescribe;
using namespace prescribe::refine;

namespace {

graph::StarWeights single_vertex() { return graph::normalize_for_construction({2.0, {}, {1.0}}); }

PhiEpsConfig at(double eps) {
  PhiEpsConfig c;
  c.epsilon = eps;
  return c;
}

}  // namespace

TEST(PhiEps, SingleVertexApproachesGraphEigenvalue) {
  const auto w = single_vertex();
  const double limit = graph::forward_spectrum(w)[0];
  EXPECT_NEAR(limit, 2.0, 1e-12);
  double prev = INFINITY;
  for (double eps : {0.1, 0.05, 0.025}) {
    const double err = std::abs(phi_eps(w, at(eps))[0] - limit);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(PhiEps, DeterministicAndResolutionSane) {
  const auto w = single_vertex();
  auto cfg = at(0.05);
  EXPECT_EQ(phi_eps(w, cfg), phi_eps(w, cfg));
  const double coarse = phi_eps(w, cfg)[0];
  cfg.mesh_h = 1.0 / 32;
  const double fine = phi_eps(w, cfg)[0];
  const double eps_error = std::abs(coarse - 2.0);
  EXPECT_LT(std::abs(fine - coarse), eps_error);
  EXPECT_LE(fine, coarse * (1 + 1e-9));
}

TEST(Stability, SandwichAndShrinkingDeviation) {
  const auto w = graph::normalize_for_construction(graph::prescribe_weights({{1.0, 3.0}}));
  double prev = INFINITY;
  for (double eps : {0.05, 0.025}) {
    const auto r = stability_report(w, at(eps));
    EXPECT_TRUE(r.sandwich_ok);
    for (std::size_t j = 0; j < r.v.size(); ++j) EXPECT_LE(r.v[j], r.v_model[j]);
    EXPECT_GT(r.lambda_next, r.v.back());
    const double dev = *std::max_element(r.deviations.begin(), r.deviations.end());
    EXPECT_LT(dev, prev);
    prev = dev;
  }
}

TEST(Newton, ZeroIterationsWhenAlreadyOnTarget) {
  const auto w = single_vertex();
  const auto cfg = at(0.05);
  const graph::TargetSpectrum t{phi_eps(w, cfg)};
  const auto r = newton_refine(t, w, cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.log.size(), 1u);
}

TEST(Newton, SingleVertexConvergesMonotonically) {
  const graph::TargetSpectrum t{{2.0}};
  const auto w = single_vertex();
  const auto cfg = at(0.05);
  const auto r = newton_refine(t, w, cfg);
  EXPECT_TRUE(r.converged) << r.note;
  EXPECT_LE(r.iterations, 10);
  for (std::size_t k = 1; k < r.log.size(); ++k) EXPECT_LT(r.log[k].max_miss, r.log[k - 1].max_miss);
  // Oracle: re-evaluate at the returned weights on the frozen plan.
  auto frozen = cfg;
  frozen.plan = r.plan;
  EXPECT_LE(std::abs(phi_eps(r.weights, frozen)[0] - 2.0) / 2.0, 1e-3);
  EXPECT_EQ(r.weights.mu[0], w.mu[0]);
}

TEST(Newton, RejectsMismatchedInput) {
  EXPECT_THROW(newton_refine({{1.0, 2.0}}, single_vertex(), at(0.05)), ValidationError);
  NewtonOptions bad;
  bad.tol = 0.0;
  EXPECT_THROW(newton_refine({{2.0}}, single_vertex(), at(0.05), bad), ValidationError);
}

TEST(PrescribeSurface, EpsilonKeepsDiskUnderHalfTheArea) {
  const auto w = graph::normalize_for_construction(graph::prescribe_weights({{1.0, 2.0, 3.0}}));
  SurfaceConfig cfg;
  for (double area : {10.0, 1.0, 0.1}) {
    const double eps = choose_epsilon(w, area, cfg);
    double mu = 0.0;
    for (double m : w.mu) mu += m;
    EXPECT_LT(eps * mu, 0.5 * area);
    EXPECT_NO_THROW(surface::blueprint_from_weights(w, eps));
  }
}

TEST(PrescribeSurface, TinyAreaIsInfeasibleWithStageTag) {
  SurfaceConfig cfg;
  try {
    (void)prescribe_surface({{1.0, 2.0, 3.0}}, 1e-6, cfg);
    FAIL() << "expected InfeasibleArea";
  } catch (const InfeasibleArea& e) {
    EXPECT_EQ(std::string(e.what()).rfind("choose epsilon: ", 0), 0u);
  }
  EXPECT_THROW(prescribe_surface({{1.0}}, -1.0, cfg), ValidationError);
}

TEST(PrescribeSurface, SingleVertexEndToEnd) {
  SurfaceConfig cfg;
  cfg.phi.epsilon = 0.05;
  const auto r = prescribe_surface({{2.0}}, 3.0, cfg);
  EXPECT_TRUE(r.report.newton.converged);
  EXPECT_LT(std::abs(r.report.area - 3.0) / 3.0, 0.005);
  ASSERT_TRUE(r.blueprint.rectangle.has_value());
  EXPECT_LE(r.report.drift[0], 0.05);
  EXPECT_GE(r.report.lambda_next, 2.0 * r.report.achieved[0]);
}
