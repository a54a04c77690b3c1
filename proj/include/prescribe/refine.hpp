#pragma once

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "prescribe/fem/assemble.hpp"
#include "prescribe/fem/blueprint_mesh.hpp"
#include "prescribe/fem/eigensolver.hpp"
#include "prescribe/graph_spectrum.hpp"
#include "prescribe/surface_model.hpp"

namespace prescribe::refine {

using graph::StarWeights;
using graph::TargetSpectrum;

struct PhiEpsConfig {
  double epsilon = 0.05;
  std::optional<double> mesh_h;       ///< empty: automatic (8 elements per layout unit)
  std::optional<fem::MeshPlan> plan;  ///< frozen mesh topology
  fem::SolverOptions solver;

  double h() const { return mesh_h.value_or(fem::kDefaultMeshH); }
};

/// Discrete spectrum of (D, eps h_eps) together with what produced it.
struct DiscreteSpectrum {
  std::vector<double> lambda;  ///< eps-scaled, ascending
  std::vector<double> residuals;
  surface::SurfaceBlueprint blueprint;
  fem::MeshPlan plan;
  int dofs = 0;
  double area = 0.0;  ///< eps-scaled mesh area
};

inline fem::BoundaryCondition construction_bc(const fem::Mesh& m) {
  return fem::BoundaryCondition::all(m, fem::BoundaryKind::Dirichlet);
}

inline DiscreteSpectrum discrete_spectrum(const surface::SurfaceBlueprint& bp, const fem::MeshPlan& plan, int count,
                                          const fem::SolverOptions& opt) {
  const auto dom = fem::mesh_blueprint(bp, plan);
  const auto sp = fem::assemble(dom);
  const auto r = fem::solve_smallest(sp, construction_bc(dom.mesh), count, opt);
  DiscreteSpectrum out;
  for (double l : r.eigenvalues) out.lambda.push_back(l / bp.epsilon);
  out.residuals = r.residuals;
  out.blueprint = bp;
  out.plan = plan;
  out.dofs = sp.dofs.n_dofs;
  out.area = bp.epsilon * fem::surface_area(dom);
  return out;
}

inline DiscreteSpectrum discrete_spectrum(const StarWeights& w, const PhiEpsConfig& cfg, int count) {
  std::optional<surface::BoxLayout> layout;
  if (cfg.plan) layout = cfg.plan->layout;
  const auto bp = surface::blueprint_from_weights(w, cfg.epsilon, layout);
  const auto plan = cfg.plan ? *cfg.plan : fem::plan_mesh(bp, cfg.h());
  return discrete_spectrum(bp, plan, count, cfg.solver);
}

/// First N Dirichlet eigenvalues of the disk under eps * h_eps(w).
inline std::vector<double> phi_eps(const StarWeights& w, const PhiEpsConfig& cfg) {
  return discrete_spectrum(w, cfg, static_cast<int>(w.size())).lambda;
}


// ---------------------------------------------------------------------------

struct StabilityReport {
  std::vector<double> v_model;  ///< eigenvalues of ((1/eps) Q_F, M_F)
  std::vector<double> v;        ///< first N discrete eigenvalues
  double lambda_next = 0.0;     ///< discrete eigenvalue N+1
  std::vector<double> deviations;
  bool sandwich_ok = false;  ///< v_j <= v_model_j (up to solver tolerance)
  bool gap_ok = false;       ///< lambda_next >= 2 v_N
};

inline StabilityReport stability_report(const StarWeights& w, const PhiEpsConfig& cfg) {
  const int n = static_cast<int>(w.size());
  const auto ds = discrete_spectrum(w, cfg, n + 1);
  StabilityReport r;
  r.v_model = surface::model_eigenvalues(ds.blueprint);
  r.v.assign(ds.lambda.begin(), ds.lambda.begin() + n);
  r.lambda_next = ds.lambda[static_cast<std::size_t>(n)];
  r.sandwich_ok = true;
  for (int j = 0; j < n; ++j) {
    const double dev = r.v_model[j] - r.v[j];
    r.deviations.push_back(dev);
    if (dev < -cfg.solver.tol * std::abs(r.v_model[j])) r.sandwich_ok = false;
  }
  r.gap_ok = r.lambda_next >= 2.0 * r.v.back();
  return r;
}

// ---------------------------------------------------------------------------
// Newton refinement on the slice with frozen poles b_i and frozen mu_0.

inline double max_relative_miss(const std::vector<double>& achieved, const TargetSpectrum& t) {
  double m = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) m = std::max(m, std::abs(achieved[k] - t.a[k]) / t.a[k]);
  return m;
}

struct NewtonStep {
  int iteration = 0;
  double max_miss = 0.0;
  double damping = 0.0;  ///< step fraction that produced this iterate (0 for the start)
  StarWeights weights;
  std::vector<double> achieved;
};

struct NewtonResult {
  StarWeights weights;
  std::vector<double> achieved;
  double max_miss = 0.0;
  bool converged = false;
  int iterations = 0;
  std::vector<NewtonStep> log;
  fem::MeshPlan plan;
  std::string note;  ///< why the iteration stopped early, if it did
};

struct NewtonOptions {
  double tol = 1e-3;
  int max_iter = 10;
  double fd_step = 1e-3;  ///< relative
  int max_halvings = 8;
  double max_condition = 1e12;
};

namespace detail {

/// Slice coordinates: log theta, log theta_i.
inline Eigen::VectorXd slice_coords(const StarWeights& w) {
  Eigen::VectorXd p(static_cast<Eigen::Index>(w.size()));
  p(0) = std::log(w.theta);
  for (std::size_t i = 0; i < w.theta_i.size(); ++i) p(static_cast<Eigen::Index>(i + 1)) = std::log(w.theta_i[i]);
  return p;
}

inline StarWeights from_slice(const Eigen::VectorXd& p, const StarWeights& base, const std::vector<double>& poles) {
  StarWeights w = base;
  w.theta = std::exp(p(0));
  for (std::size_t i = 0; i < w.theta_i.size(); ++i) {
    w.theta_i[i] = std::exp(p(static_cast<Eigen::Index>(i + 1)));
    w.mu[i + 1] = w.theta_i[i] / poles[i];
  }
  return w;
}

}  // namespace detail

inline NewtonResult newton_refine(const TargetSpectrum& t, const StarWeights& w0, const PhiEpsConfig& cfg,
                                  const NewtonOptions& opt = {}) {
  graph::validate(t);
  graph::validate(w0);
  if (t.size() != w0.size()) throw ValidationError("newton_refine: target count differs from weight size");
  if (!(opt.tol > 0.0) || opt.max_iter < 0) throw ValidationError("newton_refine: tol must be positive, max_iter >= 0");
  const std::size_t n = t.size();
  const auto poles = graph::poles(w0);

  PhiEpsConfig frozen = cfg;
  if (!frozen.plan) frozen.plan = fem::plan_mesh(surface::blueprint_from_weights(w0, cfg.epsilon), cfg.h());

  auto eval = [&](const StarWeights& w) { return phi_eps(w, frozen); };
  auto residual = [&](const std::vector<double>& ach) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) r(static_cast<Eigen::Index>(k)) = (ach[k] - t.a[k]) / t.a[k];
    return r;
  };

  NewtonResult res;
  res.plan = *frozen.plan;
  res.weights = w0;
  res.achieved = eval(w0);
  res.max_miss = max_relative_miss(res.achieved, t);
  res.log.push_back({0, res.max_miss, 0.0, w0, res.achieved});

  Eigen::VectorXd p = detail::slice_coords(w0);
  while (res.max_miss > opt.tol && res.iterations < opt.max_iter) {
    const Eigen::VectorXd r = residual(res.achieved);
    Eigen::MatrixXd J(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    // Columns are independent solves; gathered in index order.
    std::vector<std::future<std::vector<double>>> cols;
    for (std::size_t c = 0; c < n; ++c) {
      Eigen::VectorXd q = p;
      q(static_cast<Eigen::Index>(c)) += opt.fd_step;
      cols.push_back(std::async(std::launch::async, eval, detail::from_slice(q, w0, poles)));
    }
    for (std::size_t c = 0; c < n; ++c)
      J.col(static_cast<Eigen::Index>(c)) = (residual(cols[c].get()) - r) / opt.fd_step;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
    if (!(cond <= opt.max_condition))
      throw NumericalError("newton_refine: singular Jacobian (condition number " + std::to_string(cond) + ")");
    const Eigen::VectorXd dp = J.fullPivLu().solve(-r);

    bool accepted = false;
    double alpha = 1.0;
    for (int h = 0; h <= opt.max_halvings && !accepted; ++h, alpha *= 0.5) {
      const Eigen::VectorXd q = p + alpha * dp;
      const StarWeights w = detail::from_slice(q, w0, poles);
      std::vector<double> ach;
      try {
        ach = eval(w);
      } catch (const ValidationError&) {
        continue;  // step left the feasible region
      }
      const double miss = max_relative_miss(ach, t);
      if (miss < res.max_miss) {
        accepted = true;
        p = q;
        res.weights = w;
        res.achieved = ach;
        res.max_miss = miss;
        ++res.iterations;
        res.log.push_back({res.iterations, miss, alpha, w, ach});
      }
    }
    if (!accepted) {
      res.note = "no damped step reduced the miss";
      break;
    }
  }
  res.converged = res.max_miss <= opt.tol;
  if (!res.converged && res.note.empty()) res.note = "iteration cap reached";
  return res;
}

// ---------------------------------------------------------------------------
// Full pipeline: weights, epsilon, Newton, rectangle, final check.

struct SurfaceConfig {
  PhiEpsConfig phi;  ///< phi.epsilon is an upper bound; the pipeline may shrink it
  NewtonOptions newton;
  std::optional<graph::PoleSequence> poles;
  double gap_factor = 10.0;    ///< M_gap = gap_factor * a_N
  double max_waist = 0.5;      ///< widest waist allowed when picking epsilon
  double min_epsilon = 1e-6;
  bool refine = true;
};

struct SpectrumReport {
  TargetSpectrum targets;
  double epsilon = 0.0;
  double gap = 0.0;
  std::vector<double> pre_attachment;  ///< first N eigenvalues of the disk alone
  std::vector<double> achieved;        ///< first N eigenvalues with the rectangle
  std::vector<double> drift;           ///< |achieved - pre| / pre
  double lambda_next = 0.0;
  double area = 0.0;         ///< mesh area in the metric eps * h_eps
  double target_area = 0.0;
  int dofs = 0;
  NewtonResult newton;
};

struct SurfaceResult {
  surface::SurfaceBlueprint blueprint;
  fem::MeshPlan plan;
  SpectrumReport report;
};

namespace detail {

/// Runs f and prefixes any library error with the stage name, keeping its type.
template <class F>
auto staged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InfeasibleArea& e) {
    throw InfeasibleArea(stage + ": " + e.what());
  } catch (const InfeasibleEpsilon& e) {
    throw InfeasibleEpsilon(stage + ": " + e.what());
  } catch (const RefinementRequired& e) {
    throw RefinementRequired(stage + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(stage + ": " + e.what());
  } catch (const ConvergenceFailure& e) {
    throw ConvergenceFailure(stage + ": " + e.what());
  } catch (const DegenerateSpectrum& e) {
    throw DegenerateSpectrum(stage + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(stage + ": " + e.what());
  }
}

inline double total_mu(const StarWeights& w) {
  double s = 0.0;
  for (double m : w.mu) s += m;
  return s;
}

}  // namespace detail

/// Largest epsilon <= the configured bound with eps * sum(mu) < A / 2 and a
/// realizable blueprint; halves on infeasibility.
inline double choose_epsilon(const StarWeights& w, double area, const SurfaceConfig& cfg) {
  if (!(area > 0.0) || !std::isfinite(area)) throw ValidationError("target area must be positive");
  double eps = std::min({cfg.phi.epsilon, surface::epsilon_for_waist(w, cfg.max_waist), 0.45 * area / detail::total_mu(w)});
  for (; eps >= cfg.min_epsilon; eps *= 0.5) {
    try {
      (void)surface::blueprint_from_weights(w, eps);
      return eps;
    } catch (const InfeasibleEpsilon&) {
    }
  }
  throw InfeasibleArea("target area " + std::to_string(area) + " needs epsilon below the floor " +
                       std::to_string(cfg.min_epsilon) + " (disk area eps * " + std::to_string(detail::total_mu(w)) +
                       " must stay under half of it)");
}

/// Disk eigenvalues before and after attaching the rectangle for one gap bound.
inline SpectrumReport attachment_report(const TargetSpectrum& t, const surface::SurfaceBlueprint& disk,
                                        const fem::MeshPlan& plan, double area, double gap,
                                        const fem::SolverOptions& opt) {
  const int n = static_cast<int>(t.size());
  SpectrumReport r;
  r.targets = t;
  r.epsilon = disk.epsilon;
  r.gap = gap;
  r.target_area = area;
  const auto bp = detail::staged("attach_rectangle", [&] { return surface::attach_rectangle(disk, area, gap); });
  const auto before = detail::staged("disk spectrum", [&] { return discrete_spectrum(disk, plan, n, opt); });
  r.pre_attachment = before.lambda;
  const auto after = detail::staged("final spectrum", [&] { return discrete_spectrum(bp, plan, n + 1, opt); });
  r.achieved.assign(after.lambda.begin(), after.lambda.begin() + n);
  r.lambda_next = after.lambda.back();
  for (int k = 0; k < n; ++k) r.drift.push_back(std::abs(r.achieved[k] - r.pre_attachment[k]) / r.pre_attachment[k]);
  r.area = after.area;
  r.dofs = after.dofs;
  return r;
}

inline SurfaceResult prescribe_surface(const TargetSpectrum& t, double area, const SurfaceConfig& cfg = {}) {
  const auto w0 = detail::staged("prescribe_weights", [&] {
    return graph::normalize_for_construction(graph::prescribe_weights(t, cfg.poles));
  });
  PhiEpsConfig phi = cfg.phi;
  phi.epsilon = detail::staged("choose epsilon", [&] { return choose_epsilon(w0, area, cfg); });

  NewtonResult nr;
  if (cfg.refine) {
    NewtonOptions no = cfg.newton;
    nr = detail::staged("newton_refine", [&] { return newton_refine(t, w0, phi, no); });
  } else {
    nr.weights = w0;
    nr.plan = phi.plan ? *phi.plan : fem::plan_mesh(surface::blueprint_from_weights(w0, phi.epsilon), phi.h());
    nr.note = "refinement disabled";
  }

  const auto disk = detail::staged("blueprint", [&] {
    return surface::blueprint_from_weights(nr.weights, phi.epsilon, nr.plan.layout);
  });
  const double gap = cfg.gap_factor * t.a.back();
  SurfaceResult out;
  out.blueprint = detail::staged("attach_rectangle", [&] { return surface::attach_rectangle(disk, area, gap); });
  out.plan = out.blueprint.rectangle ? fem::plan_for_window(disk, nr.plan, out.blueprint.rectangle->c) : nr.plan;
  out.report = attachment_report(t, disk, out.plan, area, gap, phi.solver);
  out.report.newton = std::move(nr);
  return out;
}

/// Attachment drift for several gap bounds on the same disk.
inline std::vector<SpectrumReport> gap_sweep(const SurfaceResult& base, const std::vector<double>& factors,
                                             const fem::SolverOptions& opt = {}) {
  auto disk = base.blueprint;
  disk.rectangle.reset();
  const double a_n = base.report.targets.a.back();
  // One mesh for every gap, fine enough for the shortest interval.
  auto plan = base.plan;
  for (double f : factors) {
    const auto bp = surface::attach_rectangle(disk, base.report.target_area, f * a_n);
    if (bp.rectangle) plan = fem::plan_for_window(disk, plan, bp.rectangle->c);
  }
  std::vector<SpectrumReport> out;
  for (double f : factors)
    out.push_back(attachment_report(base.report.targets, disk, plan, base.report.target_area, f * a_n, opt));
  return out;
}

}  // namespace prescribe::refine
