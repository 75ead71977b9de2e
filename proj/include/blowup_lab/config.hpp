#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blowup_lab/integrator.hpp"
#include "blowup_lab/model.hpp"

namespace blowup_lab {

struct SolverConfig {
  int m = 2048;
  double cfl_safety = 0.4;
  double reaction_safety = 0.05;
  double u_stop = 1e8;
  long long max_steps = 50'000'000;
  double series_resolution = 1e-3;

  SolverParams params() const;
  bool operator==(const SolverConfig&) const = default;
};

struct SweepConfig {
  std::vector<double> Ms{8.0, 16.0, 32.0, 64.0};
  int workers = 4;
  double theorem2_tolerance = 0.1;

  bool operator==(const SweepConfig&) const = default;
};

struct SelfsimConfig {
  double y_max = 16.0;
  int m_y = 1024;
  std::vector<int> k_list{0, 1, 2, 3};
  int frame_count = 11;
  std::optional<double> s_start;  // both unset: resolution-based default plan
  std::optional<double> s_end;
  std::vector<double> cutoff_R{4.0};

  bool operator==(const SelfsimConfig&) const = default;
};

struct OutputConfig {
  std::string dir = "out";
  std::vector<std::string> formats{"csv", "json"};

  bool wants(const std::string& format) const;
  bool operator==(const OutputConfig&) const = default;
};

// INI-style document:
//   [problem]  N, p, domain_kind (interval|ball), extent are required;
//              M (50), potential_floor (1e-6), V.* (constant 1),
//              phi.* (cosine_cap over the domain)
//   [solver]   m, cfl_safety, reaction_safety, u_stop, max_steps, series_resolution
//   [sweep]    Ms, workers, theorem2_tolerance
//   [selfsim]  y_max, m_y, k_list, frame_count, s_start, s_end, cutoff_R
//   [output]   dir, formats (csv, json)
// Function keys are <V|phi>.kind, .value, .base, .amp, .center, .width,
// .extent, .nodes, .values. Lists are comma separated, brackets optional.
// '#' and ';' start comments.
struct Config {
  ProblemSpec problem;
  double M = 50.0;
  SolverConfig solver;
  SweepConfig sweep;
  SelfsimConfig selfsim;
  OutputConfig output;

  bool operator==(const Config&) const = default;
};

// Throws ConfigError naming the line for unknown sections or keys, duplicate
// keys, malformed or mistyped values, and a missing [problem] section or
// required key.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// Writes every field (function sub-keys only where they differ from their
// defaults); parse_config(serialize_config(c)) == c.
std::string serialize_config(const Config& config);

}  // namespace blowup_lab
