#pragma once

#include <string>
#include <vector>

#include "blowup_lab/mesh.hpp"
#include "blowup_lab/model.hpp"

namespace blowup_lab {

// Which parts of u_t = Δu + V|u|^{p-1}u are active. Test harnesses switch one
// off to compare against closed-form ODE or heat-equation solutions.
struct Terms {
  bool diffusion = true;
  bool reaction = true;
};

struct SolverParams {
  double cfl_safety = 0.4;
  double reaction_safety = 0.05;  // max relative growth per step
  double u_stop = 1e8;
  long long max_steps = 50'000'000;
  // Extra snapshot times hit exactly by the step control (beyond the
  // doubling snapshots); ignored once past the stopping time.
  std::vector<double> snapshot_times;
  // A series entry is recorded whenever u_max moved by this relative amount.
  double series_resolution = 1e-3;
  Terms terms;

  void validate() const;
};

enum class StopReason { Threshold, MaxSteps, Nan };
std::string to_string(StopReason r);

struct SeriesEntry {
  double t = 0.0;
  double u_max = 0.0;
  double argmax = 0.0;
};

struct Trajectory {
  ProblemSpec spec;
  double M = 0.0;
  double u_stop = 0.0;
  GridPtr grid;
  std::vector<Field> snapshots;
  std::vector<SeriesEntry> series;
  StopReason stop_reason = StopReason::Threshold;
  long long steps = 0;
};

// min(cfl_safety h^2 / (2 N_eff), reaction_safety / (p max V|u|^{p-1})).
// Throws NanState when u is not finite.
double choose_dt(const Field& u, const ProblemSpec& spec, const SolverParams& params);

// One explicit midpoint (RK2) step with the Dirichlet boundary re-imposed.
// Throws NanState if the result is not finite.
Field step_once(const Field& u, double dt, const ProblemSpec& spec, const Terms& terms = {});

// Integrates from u0 until u_stop, max_steps or a non-finite state. Does not
// validate the problem; run_to_blowup is the checked entry point.
Trajectory integrate(const ProblemSpec& spec, Field u0, const SolverParams& params);

// Integrates u0 up to exactly t_end (no stopping on u_stop).
Field integrate_until(const ProblemSpec& spec, Field u0, const SolverParams& params, double t_end);

// u0 = M phi. Throws LikelyGlobalSolution when max_steps is exhausted while
// u_max < 10 M max(phi).
Trajectory run_to_blowup(const ProblemSpec& spec, double M, const GridPtr& grid,
                         const SolverParams& params);

}  // namespace blowup_lab
