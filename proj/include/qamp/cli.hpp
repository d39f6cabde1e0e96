#pragma once

// Command-line front end. Flags override config-file values override
// defaults; the fully resolved configuration is echoed next to every output
// so any run can be reproduced from its artifacts.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace qamp {

struct RunConfig {
  std::string command;
  int n = 2;
  std::string state_source = "named";  // named | random | file
  std::string state_name = "bell";
  std::uint64_t state_seed = 0;
  std::string state_path;
  std::string scheme = "method1";
  std::string metric = "tv";
  double delta = 0.1;
  double fail = 0.05;
  std::int64_t shots = -1;  // -1 planner, 0 exact mode, >0 per-entry override
  std::string angle_schedule = "uniform";
  std::string out_dir;
  std::uint64_t seed = 0;
  int restarts = 8;
  bool blind = false;
  // verify-bound
  int trials = 200;
  double perturb_eps = 1e-6;
  double kappa = 1.1;
  std::string perturb_kind = "row-space";
  // scale / rank-audit grids
  std::vector<int> n_list;
  std::vector<double> delta_list;
  std::vector<std::uint64_t> shots_list;
  int seeds = 10;  // trials per grid point / states per n
  std::uint64_t max_shots_per_entry = 100000000;
};

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

// Runs one CLI invocation; args exclude the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace qamp
