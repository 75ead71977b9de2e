#pragma once

#include <optional>
#include <string>
#include <vector>

#include "blowup_lab/blowup.hpp"
#include "blowup_lab/integrator.hpp"

namespace blowup_lab {

struct SweepRow {
  double M = 0.0;
  double T_est = 0.0;
  double T_ci = 0.0;
  double TMp1 = 0.0;  // T_est M^{p-1}
  double a = 0.0;
  double phiV_at_a = 0.0;  // phi^{p-1}(a) V(a)
  double rate_exponent = 0.0;
  bool location_flagged = false;  // a taken from the final argmax after an ambiguous drift
};

struct SweepReport {
  double p = 2.0;
  bool subcritical = true;
  double A = 0.0;
  double target = 0.0;     // A / (p - 1)
  double maximizer = 0.0;  // dense-scan argmax of phi^{p-1} V
  double scan_slack = 0.0;  // resolution bound of the dense scan, in units of phi^{p-1} V
  double h = 0.0;
  std::vector<SweepRow> rows;  // ascending M
  std::vector<std::string> notes;
};

// Runs every M on up to `workers` threads. M values that do not blow up
// (likely-global or no threshold stop) are omitted with a note. Throws
// EmptySweep when no M blows up, InvalidArgument for non-positive or
// non-ascending Ms.
SweepReport run_sweep(const ProblemSpec& spec, const GridPtr& grid, const SolverParams& params,
                      const std::vector<double>& Ms, int workers = 4);

struct Theorem2Check {
  std::vector<double> margins;  // TMp1 - target
  double relative_deviation = 0.0;  // |margin| / target at the largest M
  bool within_tolerance = false;
  bool trend = false;  // |margin| non-increasing over the last three rows, up to T_ci noise
  bool pass() const { return within_tolerance && trend; }
};

// `tolerance` is relative to the target. Needs at least three rows.
Theorem2Check check_theorem2(const SweepReport& report, double tolerance = 0.1);

struct Theorem3Check {
  std::vector<double> margins;  // 1/A - phiV_at_a
  std::optional<double> fitted_decay_exponent;  // margin ~ C M^{-exponent}
  double expected_exponent = 0.0;                // (p - 1) / 4
  bool nonnegative = false;    // every margin >= -slack
  bool shrinking = false;      // margin at the largest M below the margin at the smallest
  bool location = false;       // |a - maximizer| <= 5h at the largest M
  bool T_positive = false;     // the lower bound on T M^{p-1} holds whenever T_est > 0
  bool pass() const { return nonnegative && shrinking && location && T_positive; }
};

// Throws Theorem3Inapplicable for supercritical problems, InsufficientData for
// fewer than three rows.
Theorem3Check check_theorem3(const SweepReport& report);

std::string sweep_csv(const SweepReport& report);

// {A, target, margins2, margins3, fitted_decay_exponent, checks}.
std::string sweep_summary_json(const SweepReport& report, const Theorem2Check& t2,
                               const std::optional<Theorem3Check>& t3);

}  // namespace blowup_lab
