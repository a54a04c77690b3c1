#include "prescribe/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <future>
#include <sstream>

#include "prescribe/fem/blueprint_mesh.hpp"
#include "prescribe/io.hpp"
#include "prescribe/refine.hpp"
#include "prescribe/verify.hpp"

namespace prescribe::cli {

namespace fs = std::filesystem;
using io::fmt;
using nlohmann::json;

RunConfig config_from_json(const json& j) {
  io::require_keys(j, {"targets", "poles", "area", "epsilon", "mesh_h", "out", "seed", "max_iter", "tol", "weights"},
                   "config");
  RunConfig c;
  auto number = [&](const char* key) {
    if (!j[key].is_number()) throw ValidationError(std::string("config: '") + key + "' must be a number");
    return j[key].get<double>();
  };
  auto integer = [&](const char* key) {
    if (!j[key].is_number_integer()) throw ValidationError(std::string("config: '") + key + "' must be an integer");
    return j[key].get<std::int64_t>();
  };
  auto text = [&](const char* key) {
    if (!j[key].is_string()) throw ValidationError(std::string("config: '") + key + "' must be a string");
    return j[key].get<std::string>();
  };
  if (j.contains("targets")) c.targets = io::number_list(j["targets"], "config.targets");
  if (j.contains("poles")) c.poles = io::number_list(j["poles"], "config.poles");
  if (j.contains("area")) c.area = number("area");
  if (j.contains("epsilon")) c.epsilon = io::number_list(j["epsilon"], "config.epsilon");
  if (j.contains("mesh_h")) {
    if (j["mesh_h"].is_string()) {
      if (j["mesh_h"].get<std::string>() != "auto") throw ValidationError("config: 'mesh_h' must be a number or \"auto\"");
    } else {
      c.mesh_h = number("mesh_h");
    }
  }
  if (j.contains("out")) c.out = text("out");
  if (j.contains("seed")) {
    const auto s = integer("seed");
    if (s < 0) throw ValidationError("config: 'seed' must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("max_iter")) c.max_iter = static_cast<int>(integer("max_iter"));
  if (j.contains("tol")) c.tol = number("tol");
  if (j.contains("weights")) c.weights = text("weights");
  return c;
}

namespace {

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string(what) + ": '" + item + "' is not a number");
    }
  }
  if (v.empty()) throw ValidationError(std::string(what) + ": empty list");
  return v;
}

struct Flags {
  std::string config, targets, poles, epsilon, mesh_h, weights, out;
  double area = 0.0, tol = 0.0;
  std::uint64_t seed = 0;
  int max_iter = 0;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--targets", f.targets, "comma-separated increasing targets");
  sub->add_option("--poles", f.poles, "comma-separated interlacing poles");
  sub->add_option("--area", f.area, "total area to prescribe");
  sub->add_option("--epsilon", f.epsilon, "epsilon value or comma-separated list");
  sub->add_option("--mesh-h", f.mesh_h, "mesh size h or 'auto'");
  sub->add_option("--out", f.out, "output directory");
  sub->add_option("--seed", f.seed, "eigensolver seed");
  sub->add_option("--max-iter", f.max_iter, "Newton iteration cap");
  sub->add_option("--tol", f.tol, "Newton tolerance on max relative miss");
  sub->add_option("--weights", f.weights, "weights JSON file");
}

RunConfig merge(const CLI::App* sub, const Flags& f) {
  RunConfig c;
  if (sub->count("--config")) c = config_from_json(io::parse_json(io::read_file(f.config), f.config));
  if (sub->count("--targets")) c.targets = parse_list(f.targets, "--targets");
  if (sub->count("--poles")) c.poles = parse_list(f.poles, "--poles");
  if (sub->count("--area")) c.area = f.area;
  if (sub->count("--epsilon")) c.epsilon = parse_list(f.epsilon, "--epsilon");
  if (sub->count("--mesh-h")) {
    if (f.mesh_h == "auto")
      c.mesh_h.reset();
    else
      c.mesh_h = parse_list(f.mesh_h, "--mesh-h").at(0);
  }
  if (sub->count("--out")) c.out = f.out;
  if (sub->count("--seed")) c.seed = f.seed;
  if (sub->count("--max-iter")) c.max_iter = f.max_iter;
  if (sub->count("--tol")) c.tol = f.tol;
  if (sub->count("--weights")) c.weights = f.weights;
  if (c.max_iter < 0) throw ValidationError("max_iter must be non-negative");
  if (!(c.tol > 0.0)) throw ValidationError("tol must be positive");
  if (c.mesh_h && !(*c.mesh_h > 0.0)) throw ValidationError("mesh h must be positive");
  for (double e : c.epsilon)
    if (!(e > 0.0)) throw ValidationError("epsilon values must be positive");
  return c;
}

graph::TargetSpectrum targets_of(const RunConfig& c) {
  if (c.targets.empty()) throw ValidationError("targets are required (--targets)");
  graph::TargetSpectrum t{c.targets};
  graph::validate(t);
  return t;
}

std::optional<graph::PoleSequence> poles_of(const RunConfig& c) {
  if (c.poles.empty()) return std::nullopt;
  return graph::PoleSequence{c.poles};
}

/// Weights from --weights as given, or normalized from --targets.
graph::StarWeights construction_weights(const RunConfig& c) {
  if (!c.weights.empty()) return io::load_weights(c.weights);
  return graph::normalize_for_construction(graph::prescribe_weights(targets_of(c), poles_of(c)));
}

double single_epsilon(const RunConfig& c, const graph::StarWeights& w) {
  if (c.epsilon.size() > 1) throw ValidationError("this command takes a single epsilon");
  return c.epsilon.empty() ? std::min(0.05, surface::epsilon_for_waist(w, 0.5)) : c.epsilon.front();
}

refine::PhiEpsConfig phi_config(const RunConfig& c, double eps) {
  refine::PhiEpsConfig p;
  p.epsilon = eps;
  p.mesh_h = c.mesh_h;
  p.solver.seed = c.seed;
  return p;
}

double mesh_h_of(const RunConfig& c) { return c.mesh_h.value_or(fem::kDefaultMeshH); }

void write(const RunConfig& c, const std::string& name, const std::string& text) {
  io::write_file(fs::path(c.out) / name, text);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

io::Series newton_series(const refine::NewtonResult& r) {
  io::Series s{"max relative miss", {}, {}};
  for (const auto& st : r.log) {
    s.x.push_back(st.iteration);
    s.y.push_back(std::max(st.max_miss, 1e-16));
  }
  return s;
}

// ---------------------------------------------------------------------------

int cmd_prescribe(const RunConfig& c, std::ostream& out) {
  const auto t = targets_of(c);
  const auto poles = poles_of(c) ? *poles_of(c) : graph::default_poles(t);
  if (!c.area) {
    const auto w = graph::prescribe_weights(t, poles);
    write(c, "weights.json", io::to_json(w, t, poles).dump(2) + "\n");
    out << "weights: theta=" << fmt(w.theta) << " theta_i=[" << join(w.theta_i) << "] mu=[" << join(w.mu) << "]\n";
    return kExitOk;
  }
  refine::SurfaceConfig sc;
  sc.poles = poles;
  if (!c.epsilon.empty()) sc.phi.epsilon = c.epsilon.front();
  sc.phi.mesh_h = c.mesh_h;
  sc.phi.solver.seed = c.seed;
  sc.newton.tol = c.tol;
  sc.newton.max_iter = c.max_iter;
  const auto r = refine::prescribe_surface(t, *c.area, sc);
  write(c, "weights.json", io::to_json(r.report.newton.weights, t, poles).dump(2) + "\n");
  write(c, "blueprint.json", io::to_json(r.blueprint).dump(2) + "\n");
  write(c, "report.json", io::to_json(r.report).dump(2) + "\n");
  write(c, "spectrum.csv", io::report_csv(t, r.report.achieved));
  write(c, "newton_log.csv", io::newton_csv(r.report.newton));
  write(c, "newton_miss.svg", io::line_chart_svg({newton_series(r.report.newton)},
                                                 {"Newton refinement", "iteration", "max relative miss", false, true}));
  out << "prescribed: eps=" << fmt(r.report.epsilon) << " area=" << fmt(r.report.area) << " eigenvalues=["
      << join(r.report.achieved) << "] newton " << (r.report.newton.converged ? "converged" : "not converged") << "\n";
  return kExitOk;
}

int cmd_forward(const RunConfig& c, std::ostream& out) {
  if (c.weights.empty()) throw ValidationError("forward needs --weights");
  const auto w = io::load_weights(c.weights);
  const auto lam = graph::forward_spectrum(w);
  write(c, "spectrum.csv", io::spectrum_csv(lam));
  out << "eigenvalues: " << join(lam) << "\n";
  return kExitOk;
}

surface::SurfaceBlueprint blueprint_of(const RunConfig& c) {
  const auto w = construction_weights(c);
  auto bp = surface::blueprint_from_weights(w, single_epsilon(c, w));
  if (c.area) bp = surface::attach_rectangle(bp, *c.area, 10.0 * graph::forward_spectrum(w).back());
  return bp;
}

int cmd_blueprint(const RunConfig& c, std::ostream& out) {
  const auto bp = blueprint_of(c);
  write(c, "blueprint.json", io::to_json(bp).dump(2) + "\n");
  out << "blueprint: eps=" << fmt(bp.epsilon) << " tubes=" << bp.tubes.size() << " scaled area=" << fmt(bp.scaled_area())
      << "\n";
  return kExitOk;
}

int cmd_mesh(const RunConfig& c, std::ostream& out) {
  const auto bp = blueprint_of(c);
  auto plan = fem::plan_mesh(bp, mesh_h_of(c));
  if (bp.rectangle) plan = fem::plan_for_window(bp, plan, bp.rectangle->c);
  const auto d = fem::mesh_blueprint(bp, plan);
  io::save_mesh(fs::path(c.out) / "mesh.off", d);
  write(c, "blueprint.json", io::to_json(bp).dump(2) + "\n");
  out << "mesh: " << d.mesh.vertex_count() << " vertices, " << d.mesh.triangle_count()
      << " triangles, scaled area=" << fmt(bp.epsilon * fem::surface_area(d)) << "\n";
  return kExitOk;
}

/// phi_eps plus one extra eigenvalue for each epsilon, solved concurrently.
std::vector<refine::DiscreteSpectrum> spectra(const RunConfig& c, const graph::StarWeights& w,
                                              const std::vector<double>& eps) {
  std::vector<std::future<refine::DiscreteSpectrum>> jobs;
  for (double e : eps)
    jobs.push_back(std::async(std::launch::async, [&, e] {
      return refine::discrete_spectrum(w, phi_config(c, e), static_cast<int>(w.size()) + 1);
    }));
  std::vector<refine::DiscreteSpectrum> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::vector<io::EigenRow> eigen_rows(const RunConfig& c, const std::vector<refine::DiscreteSpectrum>& s) {
  std::vector<io::EigenRow> rows;
  for (const auto& d : s)
    for (std::size_t k = 0; k < d.lambda.size(); ++k)
      rows.push_back({d.blueprint.epsilon, mesh_h_of(c), static_cast<int>(k + 1), d.lambda[k], d.residuals[k]});
  return rows;
}

int cmd_eig(const RunConfig& c, std::ostream& out) {
  const auto w = construction_weights(c);
  const auto eps = c.epsilon.empty() ? std::vector<double>{single_epsilon(c, w)} : c.epsilon;
  const auto s = spectra(c, w, eps);
  write(c, "spectrum.csv", io::eigen_csv(eigen_rows(c, s)));
  out << "eig: " << eps.size() << " epsilon value(s), lambda at eps=" << fmt(eps.back()) << ": " << join(s.back().lambda)
      << "\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
  const auto w = construction_weights(c);
  const auto eps = c.epsilon.empty() ? std::vector<double>{0.1, 0.05, 0.025} : c.epsilon;
  for (std::size_t i = 1; i < eps.size(); ++i)
    if (!(eps[i] < eps[i - 1])) throw ValidationError("sweep epsilon list must be strictly decreasing");
  const auto s = spectra(c, w, eps);
  write(c, "spectrum.csv", io::eigen_csv(eigen_rows(c, s)));

  const std::size_t n = w.size();
  std::string st = "epsilon,j,v,v_model,deviation,lambda_next\n";
  std::vector<io::Series> fem_series(n + 1), model_series(n);
  for (const auto& d : s) {
    const auto vf = surface::model_eigenvalues(d.blueprint);
    for (std::size_t j = 0; j < n; ++j) {
      st += fmt(d.blueprint.epsilon) + "," + std::to_string(j + 1) + "," + fmt(d.lambda[j]) + "," + fmt(vf[j]) + "," +
            fmt(vf[j] - d.lambda[j]) + "," + fmt(d.lambda[n]) + "\n";
      model_series[j].name = "model " + std::to_string(j + 1);
      model_series[j].x.push_back(d.blueprint.epsilon);
      model_series[j].y.push_back(vf[j]);
    }
    for (std::size_t j = 0; j <= n; ++j) {
      fem_series[j].name = "lambda_" + std::to_string(j + 1);
      fem_series[j].x.push_back(d.blueprint.epsilon);
      fem_series[j].y.push_back(d.lambda[j]);
    }
  }
  write(c, "stability.csv", st);
  auto all = fem_series;
  all.insert(all.end(), model_series.begin(), model_series.end());
  const auto limit = graph::forward_spectrum(w);
  write(c, "eigenvalues_vs_epsilon.svg",
        io::line_chart_svg(all, {"Eigenvalues against epsilon", "epsilon", "lambda (eps-scaled)", true, true, limit}));
  out << "sweep: " << eps.size() << " points, lambda at eps=" << fmt(eps.back()) << ": " << join(s.back().lambda) << "\n";
  return kExitOk;
}

int cmd_refine(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto t = targets_of(c);
  const auto poles = poles_of(c) ? *poles_of(c) : graph::default_poles(t);
  const auto w0 = graph::normalize_for_construction(graph::prescribe_weights(t, poles));
  refine::NewtonOptions no;
  no.tol = c.tol;
  no.max_iter = c.max_iter;
  const auto r = refine::newton_refine(t, w0, phi_config(c, single_epsilon(c, w0)), no);
  write(c, "weights.json", io::to_json(r.weights, t, poles).dump(2) + "\n");
  write(c, "newton_log.csv", io::newton_csv(r));
  write(c, "report.json", io::to_json(r).dump(2) + "\n");
  write(c, "spectrum.csv", io::report_csv(t, r.achieved));
  write(c, "newton_miss.svg",
        io::line_chart_svg({newton_series(r)}, {"Newton refinement", "iteration", "max relative miss", false, true}));
  out << "refine: " << (r.converged ? "converged" : "not converged") << " after " << r.iterations
      << " iterations, max miss " << fmt(r.max_miss) << "\n";
  if (!r.converged) {
    err << "refine: " << r.note << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_verify(const RunConfig& c, std::ostream& out) {
  std::ostringstream log;
  const auto lines = verify::run_acceptance(&log);
  int failed = 0;
  for (const auto& l : lines) failed += l.pass ? 0 : 1;
  write(c, "verify.txt", log.str());
  out << log.str() << (lines.size() - static_cast<std::size_t>(failed)) << "/" << lines.size() << " checks passed\n";
  return failed == 0 ? kExitOk : kExitFailedChecks;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prescribe Dirichlet eigenvalues and area on a disk"};
  app.require_subcommand(1);
  const std::vector<std::pair<std::string, std::string>> commands{
      {"prescribe", "star-graph weights for targets; with --area the full surface pipeline"},
      {"forward", "graph eigenvalues of a weights file"},
      {"blueprint", "surface blueprint for weights or targets"},
      {"mesh", "mesh a blueprint (OFF + JSON sidecar)"},
      {"eig", "discrete eigenvalues for one or more epsilon values"},
      {"sweep", "epsilon sweep with model comparison and plots"},
      {"refine", "Newton refinement of weights at fixed epsilon"},
      {"verify", "run the acceptance checks"}};
  Flags flags;
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* s = app.add_subcommand(name, help);
    add_flags(s, flags);
    subs.push_back(s);
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    for (auto* s : subs) {
      if (!s->parsed()) continue;
      const auto c = merge(s, flags);
      const auto& name = s->get_name();
      if (name == "prescribe") return cmd_prescribe(c, out);
      if (name == "forward") return cmd_forward(c, out);
      if (name == "blueprint") return cmd_blueprint(c, out);
      if (name == "mesh") return cmd_mesh(c, out);
      if (name == "eig") return cmd_eig(c, out);
      if (name == "sweep") return cmd_sweep(c, out);
      if (name == "refine") return cmd_refine(c, out, err);
      if (name == "verify") return cmd_verify(c, out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  err << "error: no subcommand\n";
  return kExitValidation;
}

}  // namespace prescribe::cli
