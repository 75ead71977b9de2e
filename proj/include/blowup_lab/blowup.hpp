#pragma once

#include <string>
#include <vector>

#include "blowup_lab/integrator.hpp"

namespace blowup_lab {

struct TimeEstimate {
  double T = 0.0;
  double ci = 0.0;  // half-width
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t points = 0;
};

// Least-squares line through (t, u_max^{1-p}) over the final decade of u_max;
// T is its root. The half-width is the larger of the residual envelope and the
// shift of the root when the fit moves back one decade.
TimeEstimate estimate_T(const Trajectory& traj);

// Core fit on raw series, exposed for synthetic checks. `p` selects the
// transform; entries are (t, u_max) pairs in time order.
TimeEstimate estimate_T(std::span<const SeriesEntry> series, double p);

struct BlowupPoint {
  double a = 0.0;
  double drift = 0.0;    // max |argmax - a| over the last decade
  bool settled = true;   // drift <= 2h
};

// Argmax of the final snapshot; throws AmbiguousLocation if the argmax moved
// by more than 10h over the last decade of growth.
BlowupPoint locate_blowup_point(const Trajectory& traj);

// Slope of log u_max against -log(T - t) for u_max in [u_stop/1e3, u_stop/10].
double fit_rate_exponent(const Trajectory& traj, double T);
double fit_rate_exponent(std::span<const SeriesEntry> series, double T, double u_lo, double u_hi);

// max over the series of (T - t)^beta u_max.
double typeI_statistic(const Trajectory& traj, double T);
double typeI_statistic(std::span<const SeriesEntry> series, double T, double beta);

// max / min of (T - t)^beta u_max over the rate-fit window; 1 means a flat
// plateau.
double typeI_plateau_ratio(const Trajectory& traj, double T);

// Grid points of the final snapshot whose rescaled value reaches `threshold`
// times the rescaled final maximum.
std::vector<double> blowup_set_proxy(const Trajectory& traj, double T, double threshold = 0.5);

struct ConcentrationSample {
  double t = 0.0;
  double Phi = 0.0;
  double I = 0.0;
  double dPhi = 0.0;
  double defect = 0.0;  // Phi' - (p+1)/(p-1) C Phi^{(1+p)/2}
};

// Phi = 1/2 int_B u^2, I = 1/2 int_B |grad u|^2 - V_floor/(p+1) int_B u^{p+1},
// Phi' = int_B u (Δu + V u^p) from the discrete operator, evaluated on every
// snapshot. Throws InvalidArgument if the ball leaves the domain (radial grids
// only accept center 0).
std::vector<ConcentrationSample> ball_concentration_diagnostic(const Trajectory& traj, double center,
                                                               double delta, double V_floor);
ConcentrationSample ball_concentration_sample(const Field& u, const ProblemSpec& spec, double center,
                                              double delta, double V_floor);

struct BlowupRecord {
  double T_est = 0.0;
  double T_ci = 0.0;
  double a = 0.0;
  double rate_exponent = 0.0;
  double typeI_sup = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::vector<double> blowup_set;
  bool location_settled = true;
};

BlowupRecord analyze(const Trajectory& traj);

std::string to_json(const BlowupRecord& rec);
BlowupRecord blowup_record_from_json(const std::string& text);

}  // namespace blowup_lab
