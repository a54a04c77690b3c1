#pragma once

// JSON, CSV, OFF and SVG persistence.

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "prescribe/fem/blueprint_mesh.hpp"
#include "prescribe/fem/mesh.hpp"
#include "prescribe/graph_spectrum.hpp"
#include "prescribe/refine.hpp"
#include "prescribe/surface_model.hpp"

namespace prescribe::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Numbers and files.

/// Shortest round-trip decimal; integral values keep a trailing ".0".
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file and renames, so readers never see a partial file.
inline void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  auto tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << text;
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, p);
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

inline void require_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw ValidationError(what + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError(what + ": unknown key '" + k + "'");
}

inline std::vector<double> number_list(const json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) throw ValidationError(what + ": expected an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw ValidationError(what + ": expected an array of numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

// ---------------------------------------------------------------------------
// Weights, targets, poles.

inline json to_json(const graph::StarWeights& w) {
  return {{"theta", w.theta}, {"theta_i", w.theta_i}, {"mu", w.mu}};
}

inline json to_json(const graph::StarWeights& w, const graph::TargetSpectrum& t, const graph::PoleSequence& p) {
  auto j = to_json(w);
  j["targets"] = t.a;
  j["poles"] = p.b;
  return j;
}

inline graph::StarWeights weights_from_json(const json& j) {
  require_keys(j, {"theta", "theta_i", "mu", "targets", "poles"}, "weights");
  if (!j.contains("theta") || !j.contains("mu")) throw ValidationError("weights: 'theta' and 'mu' are required");
  if (!j["theta"].is_number()) throw ValidationError("weights: 'theta' must be a number");
  graph::StarWeights w;
  w.theta = j["theta"].get<double>();
  if (j.contains("theta_i")) w.theta_i = number_list(j["theta_i"], "weights.theta_i");
  w.mu = number_list(j["mu"], "weights.mu");
  graph::validate(w);
  return w;
}

inline graph::StarWeights load_weights(const std::filesystem::path& p) {
  return weights_from_json(parse_json(read_file(p), p.string()));
}

// ---------------------------------------------------------------------------
// Blueprint and reports.

inline json to_json(const surface::BoxRealization& b) {
  return {{"side", b.side()}, {"height", b.height}, {"ports", b.ports}, {"area", b.area()}, {"lid", b.is_lid()}};
}

inline json to_json(const surface::SurfaceBlueprint& bp) {
  json tubes = json::array();
  for (const auto& t : bp.tubes)
    tubes.push_back({{"role", t.role == surface::TubeRole::Boundary ? "boundary" : "spoke"},
                     {"spoke", t.spoke},
                     {"waist", t.waist},
                     {"chart_length", t.chart_length},
                     {"copies", t.copies},
                     {"area_per_copy", t.area_per_copy}});
  json caps = json::array();
  for (const auto& c : bp.caps) caps.push_back({{"spoke", c.spoke}, {"target_area", c.target_area}, {"box", to_json(c.box)}});
  json j = {{"weights", to_json(bp.weights)},
            {"epsilon", bp.epsilon},
            {"tubes", tubes},
            {"caps", caps},
            {"hub", {{"target_area", bp.hub.target_area}, {"ports", bp.hub.n_ports}, {"box", to_json(bp.hub.box)}}},
            {"disk_area", bp.disk_area()},
            {"scaled_area", bp.scaled_area()}};
  if (bp.rectangle)
    j["rectangle"] = {{"a", bp.rectangle->a}, {"b", bp.rectangle->b}, {"c", bp.rectangle->c}, {"gap", bp.rectangle->gap}};
  else
    j["rectangle"] = nullptr;
  return j;
}

inline json to_json(const refine::NewtonResult& r) {
  json log = json::array();
  for (const auto& s : r.log)
    log.push_back({{"iteration", s.iteration},
                   {"max_miss", s.max_miss},
                   {"damping", s.damping},
                   {"weights", to_json(s.weights)},
                   {"achieved", s.achieved}});
  return {{"converged", r.converged}, {"iterations", r.iterations}, {"max_miss", r.max_miss},
          {"weights", to_json(r.weights)}, {"achieved", r.achieved}, {"note", r.note}, {"log", log}};
}

inline json to_json(const refine::SpectrumReport& r) {
  std::vector<double> miss;
  for (std::size_t k = 0; k < r.targets.size(); ++k) miss.push_back(std::abs(r.achieved[k] - r.targets.a[k]) / r.targets.a[k]);
  return {{"targets", r.targets.a},     {"epsilon", r.epsilon},       {"gap", r.gap},
          {"pre_attachment", r.pre_attachment}, {"achieved", r.achieved}, {"rel_miss", miss},
          {"drift", r.drift},           {"lambda_next", r.lambda_next}, {"area", r.area},
          {"target_area", r.target_area}, {"dofs", r.dofs},           {"newton", to_json(r.newton)}};
}

// ---------------------------------------------------------------------------
// CSV.

inline std::string spectrum_csv(const std::vector<double>& lambda) {
  std::string s = "k,lambda\n";
  for (std::size_t k = 0; k < lambda.size(); ++k) s += std::to_string(k + 1) + "," + fmt(lambda[k]) + "\n";
  return s;
}

struct EigenRow {
  double epsilon = 0.0;
  double h = 0.0;
  int k = 0;
  double lambda = 0.0;
  double residual = 0.0;
};

inline std::string eigen_csv(const std::vector<EigenRow>& rows) {
  std::string s = "epsilon,h,k,lambda,residual\n";
  for (const auto& r : rows)
    s += fmt(r.epsilon) + "," + fmt(r.h) + "," + std::to_string(r.k) + "," + fmt(r.lambda) + "," + fmt(r.residual) + "\n";
  return s;
}

inline std::string report_csv(const graph::TargetSpectrum& t, const std::vector<double>& achieved) {
  std::string s = "k,target,achieved,rel_miss\n";
  for (std::size_t k = 0; k < t.size(); ++k)
    s += std::to_string(k + 1) + "," + fmt(t.a[k]) + "," + fmt(achieved[k]) + "," +
         fmt(std::abs(achieved[k] - t.a[k]) / t.a[k]) + "\n";
  return s;
}

inline std::string newton_csv(const refine::NewtonResult& r) {
  std::string s = "iteration,max_miss,damping,theta";
  const std::size_t n = r.log.empty() ? 0 : r.log.front().weights.theta_i.size();
  for (std::size_t i = 1; i <= n; ++i) s += ",theta_" + std::to_string(i);
  for (std::size_t k = 1; k <= n + 1; ++k) s += ",lambda_" + std::to_string(k);
  s += "\n";
  for (const auto& st : r.log) {
    s += std::to_string(st.iteration) + "," + fmt(st.max_miss) + "," + fmt(st.damping) + "," + fmt(st.weights.theta);
    for (double x : st.weights.theta_i) s += "," + fmt(x);
    for (double x : st.achieved) s += "," + fmt(x);
    s += "\n";
  }
  return s;
}

// ---------------------------------------------------------------------------
// Meshes: OFF geometry plus a JSON sidecar with patches, tags, gluing, metric.

inline std::string to_off(const fem::Mesh& m) {
  std::string s = "OFF\n" + std::to_string(m.vertex_count()) + " " + std::to_string(m.triangle_count()) + " 0\n";
  for (const auto& v : m.vertices) s += fmt(v.x()) + " " + fmt(v.y()) + " 0\n";
  for (const auto& t : m.triangles)
    s += "3 " + std::to_string(t[0]) + " " + std::to_string(t[1]) + " " + std::to_string(t[2]) + "\n";
  return s;
}

inline json mesh_meta(const fem::MeshedDomain& d) {
  json edges = json::array(), glue = json::array(), metric = json::array();
  for (const auto& e : d.mesh.boundary_edges) edges.push_back({e.a, e.b, e.tag});
  for (const auto& [a, b] : d.mesh.gluing) glue.push_back({a, b});
  for (const auto& g : d.metric.g) metric.push_back({g(0, 0), g(0, 1), g(1, 1)});
  return {{"patches", d.mesh.patch_names}, {"vertex_patch", d.mesh.vertex_patch}, {"boundary_edges", edges},
          {"gluing", glue}, {"metric", metric}};
}

inline fem::MeshedDomain from_off(const std::string& off, const json& meta) {
  std::istringstream in(off);
  std::string magic;
  int nv = 0, nf = 0, ne = 0;
  if (!(in >> magic) || magic != "OFF" || !(in >> nv >> nf >> ne) || nv < 0 || nf < 0)
    throw ValidationError("OFF: malformed header");
  fem::MeshedDomain d;
  for (int i = 0; i < nv; ++i) {
    double x, y, z;
    if (!(in >> x >> y >> z)) throw ValidationError("OFF: truncated vertex list");
    d.mesh.vertices.emplace_back(x, y);
  }
  for (int i = 0; i < nf; ++i) {
    int n, a, b, c;
    if (!(in >> n >> a >> b >> c) || n != 3) throw ValidationError("OFF: only triangles are supported");
    d.mesh.triangles.push_back({a, b, c});
  }
  require_keys(meta, {"patches", "vertex_patch", "boundary_edges", "gluing", "metric"}, "mesh meta");
  try {
    d.mesh.patch_names = meta.at("patches").get<std::vector<std::string>>();
    d.mesh.vertex_patch = meta.at("vertex_patch").get<std::vector<int>>();
    for (const auto& e : meta.at("boundary_edges")) d.mesh.boundary_edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<std::string>()});
    for (const auto& g : meta.at("gluing")) d.mesh.gluing.emplace_back(g.at(0).get<int>(), g.at(1).get<int>());
    for (const auto& g : meta.at("metric")) {
      fem::Matrix2d m;
      m << g.at(0).get<double>(), g.at(1).get<double>(), g.at(1).get<double>(), g.at(2).get<double>();
      d.metric.g.push_back(m);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("mesh meta: ") + e.what());
  }
  fem::validate(d.mesh, d.metric);
  return d;
}

inline void save_mesh(const std::filesystem::path& off_path, const fem::MeshedDomain& d) {
  write_file(off_path, to_off(d.mesh));
  auto meta = off_path;
  meta.replace_extension(".meta.json");
  write_file(meta, mesh_meta(d).dump(1) + "\n");
}

inline fem::MeshedDomain load_mesh(const std::filesystem::path& off_path) {
  auto meta = off_path;
  meta.replace_extension(".meta.json");
  return from_off(read_file(off_path), parse_json(read_file(meta), meta.string()));
}

// ---------------------------------------------------------------------------
// SVG line charts.

struct Series {
  std::string name;
  std::vector<double> x, y;
};

struct ChartOptions {
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<double> reference_y;  ///< dashed horizontal lines
};

inline std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& o) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 55;
  auto tx = [&](double v) { return o.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return o.log_y ? std::log10(v) : v; };
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  for (double r : o.reference_y) {
    y0 = std::min(y0, ty(r));
    y1 = std::max(y1, ty(r));
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  auto num = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", v);
    return std::string(b);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << o.title << "</text>\n";
  s << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4, fy = y0 + (y1 - y0) * i / 4;
    const double vx = o.log_x ? std::pow(10.0, fx) : fx, vy = o.log_y ? std::pow(10.0, fy) : fy;
    s << "<text x=\"" << px(vx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(vx) << "</text>\n";
    s << "<text x=\"" << L - 6 << "\" y=\"" << py(vy) + 4 << "\" text-anchor=\"end\">" << num(vy) << "</text>\n";
  }
  s << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << o.x_label << "</text>\n";
  s << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << (T + H - B) / 2 << ")\">" << o.y_label << "</text>\n";
  for (double r : o.reference_y)
    s << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << py(r) << "\" y2=\"" << py(r)
      << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& sr = series[k];
    const char* c = colors[k % 6];
    s << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < sr.x.size(); ++i) s << px(sr.x[i]) << "," << py(sr.y[i]) << " ";
    s << "\"/>\n";
    for (std::size_t i = 0; i < sr.x.size(); ++i)
      s << "<circle cx=\"" << px(sr.x[i]) << "\" cy=\"" << py(sr.y[i]) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    const double ly = T + 14 + 18.0 * static_cast<double>(k);
    s << "<line x1=\"" << W - R + 10 << "\" x2=\"" << W - R + 30 << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
      << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << W - R + 36 << "\" y=\"" << ly << "\">" << sr.name << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace prescribe::io
