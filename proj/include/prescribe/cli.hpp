#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace prescribe::cli {

/// Parameters shared by every subcommand, from a JSON file and/or flags
/// (flags win). Unknown JSON keys are rejected.
struct RunConfig {
  std::vector<double> targets;
  std::vector<double> poles;
  std::optional<double> area;
  std::vector<double> epsilon;
  std::optional<double> mesh_h;  ///< empty: automatic
  std::string out = ".";
  std::uint64_t seed = 20240521;
  int max_iter = 10;
  double tol = 1e-3;
  std::string weights;  ///< path to a weights JSON file
};

RunConfig config_from_json(const nlohmann::json& j);

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailedChecks = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

/// Runs a subcommand. Summary goes to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prescribe::cli
