#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "prescribe/fem/assemble.hpp"
#include "prescribe/fem/blueprint_mesh.hpp"

using namespace prescribe;
using namespace prescribe::fem;

namespace {

graph::StarWeights n2_weights() { return {12.0, {4.0}, {8.0, 2.0}}; }

double exact_area(const surface::SurfaceBlueprint& bp) { return bp.disk_area(); }

}  // namespace

TEST(BlueprintMesh, ThetaColumns) {
  EXPECT_EQ(theta_columns(1.0 / 16), 16);
  EXPECT_EQ(theta_columns(0.125), 8);
  EXPECT_EQ(theta_columns(0.1), 16);
  EXPECT_THROW(theta_columns(0.2), RefinementRequired);
  EXPECT_THROW(theta_columns(0.0), ValidationError);
}

TEST(BlueprintMesh, SingleVertexHasOneDirichletCircle) {
  const auto bp = surface::blueprint_from_weights({4.0, {}, {2.0}}, 0.02);
  const auto d = mesh_blueprint(bp);
  EXPECT_NO_THROW(validate(d.mesh, d.metric));
  const auto tags = boundary_tags(d.mesh);
  ASSERT_EQ(tags.size(), 1u);
  EXPECT_EQ(*tags.begin(), kBoundaryTag);
  const auto sp = assemble(d);
  EXPECT_EQ(static_cast<int>(sp.boundary_dofs.at(kBoundaryTag).size()), theta_columns(kDefaultMeshH));
}

TEST(BlueprintMesh, AreaMatchesBlueprint) {
  for (double eps : {0.01, 0.005}) {
    const auto bp = surface::blueprint_from_weights(n2_weights(), eps);
    const auto d = mesh_blueprint(bp);
    const double a = surface_area(d);
    EXPECT_LT(std::abs(a - exact_area(bp)) / exact_area(bp), 0.01);
    // P1 with centroid metric under-samples the flaring tubes only.
    EXPECT_LE(a, exact_area(bp) * (1 + 1e-12));
    EXPECT_NEAR(eps * exact_area(bp), eps * 10.0, 1e-12);
  }
}

TEST(BlueprintMesh, PlanFreezesTopology) {
  const auto bp = surface::blueprint_from_weights(n2_weights(), 0.01);
  const auto plan = plan_mesh(bp);
  const auto w = graph::StarWeights{12.3, {3.9}, {8.0, 3.9 / 2.0}};
  const auto moved = surface::blueprint_from_weights(w, 0.01, plan.layout);
  const auto a = mesh_blueprint(bp, plan);
  const auto b = mesh_blueprint(moved, plan);
  EXPECT_EQ(a.mesh.vertex_count(), b.mesh.vertex_count());
  EXPECT_EQ(a.mesh.triangle_count(), b.mesh.triangle_count());
  EXPECT_EQ(a.mesh.triangles, b.mesh.triangles);
}

TEST(BlueprintMesh, PlanMismatchRejected) {
  const auto bp = surface::blueprint_from_weights(n2_weights(), 0.01);
  auto plan = plan_mesh(bp);
  plan.tube_rows.pop_back();
  EXPECT_THROW(mesh_blueprint(bp, plan), ValidationError);
  plan = plan_mesh(bp);
  plan.n_theta = 12;
  EXPECT_THROW(mesh_blueprint(bp, plan), RefinementRequired);
  EXPECT_THROW(mesh_blueprint(bp, 0.25), RefinementRequired);
}

TEST(BlueprintMesh, RectangleAddsExactArea) {
  const auto bp = surface::blueprint_from_weights(n2_weights(), 0.01);
  const auto with = surface::attach_rectangle(bp, bp.scaled_area() + 2.0, 40.0);
  const auto d0 = mesh_blueprint(bp);
  const auto d1 = mesh_blueprint(with);
  EXPECT_NO_THROW(validate(d1.mesh, d1.metric));
  const double added = with.epsilon * (surface_area(d1) - surface_area(d0));
  EXPECT_NEAR(added, with.rectangle->a * with.rectangle->b, 1e-10);
  const auto tags = boundary_tags(d1.mesh);
  EXPECT_EQ(std::set<std::string>(tags.begin(), tags.end()), (std::set<std::string>{kBoundaryTag, kRectangleTag}));
}
