#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plw/construction.hpp"
#include "plw/sim.hpp"

namespace plw {

inline constexpr const char* kConfigSchema = "plw-config/1";

// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumeric = 3, kExitIntegrity = 4 };

struct SimConfig {
  std::size_t trials = 1000;
  DecoderKind decoder = DecoderKind::SharedMap;
  std::size_t blocks = 4;
  std::vector<double> sigma_b;  // empty: the code's design sigma_b
  std::optional<std::uint64_t> seed;  // default: the code seed
};

struct OutputConfig {
  std::string code, csv, json;
};

// {
//   "schema": "plw-config/1",
//   "chain":  {"alpha": 2.5, "levels": 2 | "auto", "aliasing_tol": 1e-3},
//   "noise":  {"sigma_b": 1, "sigma_e": 2, "sigma_s": 3, "center": 0},
//   "code":   {"n": 256, "mode": "mod-lambda" | "shaped", "mu": 64, "seed": 1,
//              "policy": {"kind": "thresholds" | "rate-target" | "beta", ...}},
//   "sim":    {"trials": 1000, "decoder": "shared-map" | "block-markov", "blocks": 4,
//              "sigma_b": [..], "seed": 7},
//   "output": {"code": "a.plwc", "csv": "a.csv", "json": "a.json"}
// }
// Unknown keys are rejected. Relative output paths resolve against the
// config file's directory.
struct Config {
  CodeParams code;
  bool levels_auto = false;
  double aliasing_tol = 1e-3;
  SimConfig sim;
  OutputConfig output;
};

Config config_from_json(const nlohmann::json& j, const std::string& base_dir = "");
Config load_config(const std::string& path);

// "alpha=5,2.5,1.25;r=2,3" ; r accepts "auto". Missing keys take the config's value.
struct Sweep {
  std::vector<double> alpha;
  std::vector<std::optional<int>> r;  // nullopt = auto
};
Sweep parse_sweep(const std::string& spec);

struct RatePoint {
  double alpha = 0;
  int r = 0;
  Achievable a;
};
std::vector<RatePoint> rate_sweep(const Config& cfg, const Sweep& sweep);
std::string rates_csv_header();
std::string rates_csv(const std::vector<RatePoint>& pts);

void print_rate_table(std::ostream& os, const WiretapCode& code);

struct Check {
  std::string name;
  bool ok = false;
  std::string detail;
};
// Small-N property checks for every module; `code_path` (if non-empty) is
// loaded and compared against a fresh construction.
std::vector<Check> verify_suite(const Config& cfg, const std::string& code_path);

// Entry point of the plwiretap tool.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace plw
