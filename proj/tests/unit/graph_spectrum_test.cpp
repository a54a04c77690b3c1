#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "prescribe/graph_spectrum.hpp"

using namespace prescribe;
using namespace prescribe::graph;

namespace {

StarWeights n2_example() { return {1.5, {0.5}, {1.0, 0.25}}; }
StarWeights n3_example() { return {16.0 / 9.0, {5.0 / 18.0, 4.0 / 9.0}, {1.0, 5.0 / 27.0, 4.0 / 27.0}}; }

// Secular sum written out independently of the library helper.
double secular_oracle(const StarWeights& w, double x) {
  double s = w.theta / x;
  for (std::size_t i = 0; i < w.theta_i.size(); ++i) s += w.theta_i[i] / (x - w.theta_i[i] / w.mu[i + 1]);
  return s / w.mu[0];
}

TargetSpectrum random_targets(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.1, 100.0);
  TargetSpectrum t;
  while (t.a.size() < n) {
    double x = u(rng);
    if (std::find(t.a.begin(), t.a.end(), x) == t.a.end()) t.a.push_back(x);
  }
  std::sort(t.a.begin(), t.a.end());
  return t;
}

PoleSequence random_poles(std::mt19937_64& rng, const TargetSpectrum& t) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  PoleSequence p;
  for (std::size_t k = 0; k + 1 < t.size(); ++k) p.b.push_back(t.a[k] + u(rng) * (t.a[k + 1] - t.a[k]));
  return p;
}

}  // namespace

TEST(LaplacianPair, SingleVertex) {
  const auto lp = laplacian_pair({2.0, {}, {1.0}});
  EXPECT_DOUBLE_EQ(lp.Q(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(lp.M(0, 0), 1.0);
}

TEST(LaplacianPair, TwoVertexEntriesMatchQuadraticForm) {
  const auto lp = laplacian_pair(n2_example());
  // q(e0) = theta + theta_1, q(e1) = theta_1, polarization gives the off-diagonal.
  EXPECT_DOUBLE_EQ(lp.Q(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(lp.Q(0, 1), -0.5);
  EXPECT_DOUBLE_EQ(lp.Q(1, 0), -0.5);
  EXPECT_DOUBLE_EQ(lp.Q(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(lp.M(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(lp.M(1, 1), 0.25);
  EXPECT_DOUBLE_EQ(lp.M(0, 1), 0.0);
}

TEST(LaplacianPair, ScalingIsBilinear) {
  const auto a = laplacian_pair(n3_example());
  const auto b = laplacian_pair(scale_weights(n3_example(), 2.0));
  EXPECT_LT((b.Q - 2.0 * a.Q).norm(), 1e-14);
  EXPECT_LT((b.M - 2.0 * a.M).norm(), 1e-14);
}

TEST(LaplacianPair, RejectsNonPositiveWeights) {
  EXPECT_THROW(laplacian_pair({0.0, {}, {1.0}}), ValidationError);
  EXPECT_THROW(laplacian_pair({1.0, {-1.0}, {1.0, 1.0}}), ValidationError);
  EXPECT_THROW(laplacian_pair({1.0, {1.0}, {1.0, 0.0}}), ValidationError);
  EXPECT_THROW(laplacian_pair({1.0, {1.0}, {1.0}}), ValidationError);
}

TEST(ForwardSpectrum, SingleVertex) {
  const auto l = forward_spectrum({2.0, {}, {1.0}});
  ASSERT_EQ(l.size(), 1u);
  EXPECT_DOUBLE_EQ(l[0], 2.0);
}

TEST(ForwardSpectrum, TwoVertexMatchesTraceDeterminantOracle) {
  const auto lp = laplacian_pair(n2_example());
  const Eigen::Matrix2d A = lp.M.inverse() * lp.Q;
  const double tr = A.trace(), det = A.determinant();
  const double disc = std::sqrt(tr * tr / 4.0 - det);
  const auto l = forward_spectrum(n2_example());
  EXPECT_NEAR(l[0], tr / 2.0 - disc, 1e-13);
  EXPECT_NEAR(l[1], tr / 2.0 + disc, 1e-13);
  EXPECT_NEAR(l[0], 1.0, 1e-13);
  EXPECT_NEAR(l[1], 3.0, 1e-13);
}

TEST(ForwardSpectrum, ThreeVertexSecularOracle) {
  for (double x : {1.0, 2.0, 4.0}) EXPECT_NEAR(secular_oracle(n3_example(), x), 1.0, 1e-14);
  const auto l = forward_spectrum(n3_example());
  EXPECT_NEAR(l[0], 1.0, 1e-12);
  EXPECT_NEAR(l[1], 2.0, 1e-12);
  EXPECT_NEAR(l[2], 4.0, 1e-12);
}

TEST(ForwardSpectrum, CoincidentPolesFallBackToDensePencil) {
  // Two leaves share the pole b = 2; lambda = 2 is then an eigenvalue.
  const StarWeights w{1.0, {1.0, 0.5}, {1.0, 0.5, 0.25}};
  const auto l = forward_spectrum(w);
  const auto lp = laplacian_pair(w);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(lp.Q, lp.M);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(l[static_cast<std::size_t>(k)], es.eigenvalues()(k), 1e-12);
  EXPECT_NEAR(l[1], 2.0, 1e-12);
}

TEST(ForwardSpectrum, UnsortedPolesAreHandled) {
  const StarWeights a = n3_example();
  const StarWeights swapped{a.theta, {a.theta_i[1], a.theta_i[0]}, {a.mu[0], a.mu[2], a.mu[1]}};
  const auto la = forward_spectrum(a), lb = forward_spectrum(swapped);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(la[k], lb[k], 1e-13);
}

TEST(PrescribeWeights, SingleTarget) {
  const auto w = prescribe_weights({{2.0}});
  EXPECT_DOUBLE_EQ(w.theta, 2.0);
  EXPECT_DOUBLE_EQ(w.mu[0], 1.0);
  EXPECT_TRUE(w.theta_i.empty());
}

TEST(PrescribeWeights, HandResiduesTwoTargets) {
  const auto w = prescribe_weights({{1.0, 3.0}}, PoleSequence{{2.0}});
  EXPECT_NEAR(w.theta, 1.5, 1e-15);
  EXPECT_NEAR(w.theta_i[0], 0.5, 1e-15);
  EXPECT_NEAR(w.mu[1], 0.25, 1e-15);
  const auto l = forward_spectrum(w);
  EXPECT_NEAR(l[0], 1.0, 1e-13);
  EXPECT_NEAR(l[1], 3.0, 1e-13);
}

TEST(PrescribeWeights, HandResiduesThreeTargets) {
  const auto w = prescribe_weights({{1.0, 2.0, 4.0}}, PoleSequence{{1.5, 3.0}});
  const auto e = n3_example();
  EXPECT_NEAR(w.theta, e.theta, 1e-14);
  EXPECT_NEAR(w.theta_i[0], e.theta_i[0], 1e-14);
  EXPECT_NEAR(w.theta_i[1], e.theta_i[1], 1e-14);
  EXPECT_NEAR(w.mu[1], e.mu[1], 1e-14);
  EXPECT_NEAR(w.mu[2], e.mu[2], 1e-14);
  for (double x : {1.0, 2.0, 4.0}) EXPECT_NEAR(secular_oracle(w, x), 1.0, 1e-13);
}

TEST(PrescribeWeights, DefaultPolesAreGeometricMeans) {
  const auto p = default_poles({{1.0, 4.0, 9.0}});
  EXPECT_DOUBLE_EQ(p.b[0], 2.0);
  EXPECT_DOUBLE_EQ(p.b[1], 6.0);
}

TEST(PrescribeWeights, RejectsInterlacingViolation) {
  EXPECT_THROW(prescribe_weights({{1.0, 3.0}}, PoleSequence{{3.5}}), ValidationError);
  EXPECT_THROW(prescribe_weights({{1.0, 3.0}}, PoleSequence{{1.0}}), ValidationError);
  EXPECT_THROW(prescribe_weights({{1.0, 3.0}}, PoleSequence{{}}), ValidationError);
  EXPECT_THROW(prescribe_weights({{3.0, 1.0}}), ValidationError);
  EXPECT_THROW(prescribe_weights({{0.0, 1.0}}), ValidationError);
}

TEST(ScaleWeights, Examples) {
  const auto w = scale_weights({2.0, {}, {1.0}}, 3.0);
  EXPECT_DOUBLE_EQ(w.theta, 6.0);
  EXPECT_DOUBLE_EQ(w.mu[0], 3.0);
  EXPECT_DOUBLE_EQ(forward_spectrum(w)[0], 2.0);

  const auto id = scale_weights(n3_example(), 1.0);
  EXPECT_EQ(id.theta, n3_example().theta);
  EXPECT_EQ(id.mu, n3_example().mu);

  const auto l = forward_spectrum(scale_weights(n2_example(), 8.0));
  EXPECT_NEAR(l[0], 1.0, 1e-13);
  EXPECT_NEAR(l[1], 3.0, 1e-13);
  EXPECT_THROW(scale_weights(n2_example(), 0.0), ValidationError);
  EXPECT_THROW(scale_weights(n2_example(), -1.0), ValidationError);
}

TEST(NormalizeForConstruction, Examples) {
  EXPECT_DOUBLE_EQ(construction_scale({2.0, {}, {1.0}}), 2.0);
  EXPECT_DOUBLE_EQ(normalize_for_construction({2.0, {}, {1.0}}).mu[0], 2.0);

  EXPECT_DOUBLE_EQ(construction_scale(n2_example()), 8.0);
  const auto w = normalize_for_construction(n2_example());
  EXPECT_DOUBLE_EQ(w.mu[0], 8.0);
  EXPECT_DOUBLE_EQ(w.mu[1], 2.0);
  EXPECT_DOUBLE_EQ(w.theta, 12.0);
  EXPECT_DOUBLE_EQ(w.theta_i[0], 4.0);

  EXPECT_DOUBLE_EQ(construction_scale(w), 1.0);
  EXPECT_EQ(normalize_for_construction(w).mu, w.mu);
}

TEST(JacobianPhi, SingleVertexClosedForm) {
  const auto j = jacobian_phi({2.0, {}, {1.0}});
  EXPECT_NEAR(j.analytic(0, 0), 1.0, 1e-14);
  EXPECT_NEAR(j.analytic(0, 1), -2.0, 1e-14);
  EXPECT_TRUE(j.submersion);
}

TEST(JacobianPhi, TwoVertexAgreesWithFiniteDifferences) {
  const auto j = jacobian_phi(n2_example());
  for (Eigen::Index r = 0; r < 2; ++r)
    for (Eigen::Index c = 0; c < 4; ++c)
      EXPECT_NEAR(j.analytic(r, c), j.finite_difference(r, c), 1e-5 * std::max(1.0, std::abs(j.analytic(r, c))));
  EXPECT_LT(j.max_discrepancy, 1e-5);
  EXPECT_GT(j.sigma_min, 1e-8);
}

TEST(JacobianPhi, RowsAnnihilateParameterVector) {
  for (const auto& w : {n2_example(), n3_example(), normalize_for_construction(n3_example())}) {
    const auto j = jacobian_phi(w);
    const Eigen::VectorXd euler = j.analytic * parameter_vector(w);
    EXPECT_LT(euler.cwiseAbs().maxCoeff(), 1e-12 * j.analytic.cwiseAbs().maxCoeff());
  }
}

TEST(JacobianPhi, RepeatedEigenvalueIsReported) {
  // Three leaves with the same pole: lambda = 2 has multiplicity two.
  const StarWeights w{1.0, {1.0, 1.0, 1.0}, {1.0, 0.5, 0.5, 0.5}};
  EXPECT_THROW(jacobian_phi(w), DegenerateSpectrum);
}

TEST(SecularFunction, EqualsOneAtEigenvalues) {
  const auto w = prescribe_weights({{0.5, 1.5, 7.0, 20.0}});
  for (double l : forward_spectrum(w)) EXPECT_NEAR(secular_function(w, l), 1.0, 1e-10);
}

// Property: random targets and interlacing poles round-trip and interlace.
TEST(GraphProperties, RandomRoundTripInterlacingScaling) {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> size(1, 10);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = random_targets(rng, size(rng));
    const auto p = random_poles(rng, t);
    const auto w = prescribe_weights(t, p);
    const auto l = forward_spectrum(w);
    ASSERT_EQ(l.size(), t.size());
    for (std::size_t k = 0; k < l.size(); ++k) ASSERT_NEAR(l[k], t.a[k], 1e-10 * t.a[k]) << "trial " << trial;

    auto b = poles(w);
    std::sort(b.begin(), b.end());
    ASSERT_GT(l[0], 0.0);
    for (std::size_t k = 0; k < b.size(); ++k) {
      ASSERT_LT(l[k], b[k]);
      ASSERT_LT(b[k], l[k + 1]);
    }
    for (double x : l) ASSERT_NEAR(secular_function(w, x), 1.0, 1e-10);

    const auto ls = forward_spectrum(scale_weights(w, scale(rng)));
    for (std::size_t k = 0; k < l.size(); ++k) ASSERT_NEAR(ls[k], l[k], 1e-12 * l[k]);
  }
}
