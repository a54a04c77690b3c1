#pragma once

#include <Eigen/Sparse>

#include <array>
#include <map>
#include <string>
#include <vector>

#include "prescribe/fem/mesh.hpp"

namespace prescribe::fem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Stiffness and mass on glued degrees of freedom.
struct SparsePair {
  SparseMatrix K;
  SparseMatrix M;
  DofMap dofs;
  std::map<std::string, std::vector<int>> boundary_dofs;  ///< tag -> sorted unique dofs
};

struct ElementMatrices {
  Eigen::Matrix3d K;
  Eigen::Matrix3d M;
};

/// P1 element matrices for chart corners p[0..2] under constant metric g.
inline ElementMatrices element_matrices(const std::array<Vector2d, 3>& p, const Matrix2d& g) {
  if (!is_spd(g)) throw ValidationError("element metric is not SPD");
  const Vector2d e1 = p[1] - p[0];
  const Vector2d e2 = p[2] - p[0];
  const double det = e1.x() * e2.y() - e1.y() * e2.x();
  if (det == 0.0) throw ValidationError("degenerate element");
  const double area = 0.5 * std::abs(det);
  // Barycentric gradients: rows of inv([e1 e2])^T complemented by -(sum).
  Eigen::Matrix<double, 3, 2> grad;
  grad.row(1) = Vector2d(e2.y(), -e2.x()) / det;
  grad.row(2) = Vector2d(-e1.y(), e1.x()) / det;
  grad.row(0) = -grad.row(1) - grad.row(2);
  const double vol = area * std::sqrt(g.determinant());
  ElementMatrices out;
  out.K = vol * grad * g.inverse() * grad.transpose();
  out.M = Eigen::Matrix3d::Constant(vol / 12.0) + Eigen::Matrix3d::Identity() * (vol / 12.0);
  return out;
}

inline SparsePair assemble(const Mesh& mesh, const MetricField& metric) {
  validate(mesh, metric);
  SparsePair sp;
  sp.dofs = build_dofs(mesh);
  const auto& dof = sp.dofs.dof_of_vertex;
  std::vector<Eigen::Triplet<double>> tk, tm;
  tk.reserve(9 * mesh.triangles.size());
  tm.reserve(9 * mesh.triangles.size());
  for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
    const auto& t = mesh.triangles[e];
    const auto em = element_matrices({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]}, metric.g[e]);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        tk.emplace_back(dof[t[a]], dof[t[b]], em.K(a, b));
        tm.emplace_back(dof[t[a]], dof[t[b]], em.M(a, b));
      }
  }
  sp.K.resize(sp.dofs.n_dofs, sp.dofs.n_dofs);
  sp.M.resize(sp.dofs.n_dofs, sp.dofs.n_dofs);
  sp.K.setFromTriplets(tk.begin(), tk.end());
  sp.M.setFromTriplets(tm.begin(), tm.end());
  // Exact symmetry: entries (i,j) and (j,i) are sums of the same terms in
  // different orders, so average them.
  sp.K = (0.5 * (SparseMatrix(sp.K.transpose()) + sp.K)).pruned();
  sp.M = (0.5 * (SparseMatrix(sp.M.transpose()) + sp.M)).pruned();
  for (const auto& be : mesh.boundary_edges) {
    auto& list = sp.boundary_dofs[be.tag];
    list.push_back(dof[be.a]);
    list.push_back(dof[be.b]);
  }
  for (auto& [tag, list] : sp.boundary_dofs) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return sp;
}

inline SparsePair assemble(const MeshedDomain& d) { return assemble(d.mesh, d.metric); }

}  // namespace prescribe::fem
