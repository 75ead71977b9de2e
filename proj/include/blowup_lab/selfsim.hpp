#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "blowup_lab/integrator.hpp"
#include "blowup_lab/mesh.hpp"
#include "blowup_lab/model.hpp"

namespace blowup_lab {

// A point of the rescaled boundary that lies inside the y-grid.
struct BoundaryTrace {
  double y = 0.0;            // signed position (radius on radial grids)
  double y_dot_gamma = 0.0;  // y . outward normal
  double grad_sq = 0.0;      // |grad w|^2 from the one-sided boundary derivative
  double measure = 1.0;      // surface element: omega_{N-1} R^{N-1}, or 1 on an interval
  double quad_weight = 0.0;  // weight of the boundary value in the closing partial cell
};

// w(y, s) = (T - t)^beta u(a + y sqrt(T - t), t), s = -log(T - t), sampled on a
// fixed y-grid and extended by zero outside the rescaled domain.
struct SelfSimilarFrame {
  double s = 0.0;
  double t = 0.0;
  double T = 0.0;
  double a = 0.0;
  double beta = 1.0;
  double p = 2.0;
  Field w;
  Field dw;  // dw/dy, radial derivative on radial grids
  double omega_lo = 0.0;
  double omega_hi = 0.0;
  double omega_s_radius = 0.0;  // distance from y = 0 to the rescaled boundary
  std::vector<BoundaryTrace> boundary;
  bool truncated = false;  // part of the rescaled boundary lies beyond the y-grid
  // Trapezoid weights over the part of the y-grid inside the rescaled domain
  // (radial surface factor included).
  std::vector<double> quad;
};

// Throws InvalidTime when snapshot.time >= T, OutOfDomain when a is outside the
// domain, InvalidArgument for a mismatched y-grid or a != 0 on radial domains.
SelfSimilarFrame to_selfsimilar_frame(const Field& snapshot, const ProblemSpec& spec, double a, double T,
                                      const GridPtr& y_grid);

// V(a + y e^{-s/2}) and y . grad_y of it on the frame's y-grid.
struct RescaledPotential {
  std::vector<double> value;
  std::vector<double> y_dot_grad;
};

RescaledPotential rescaled_potential(const SelfSimilarFrame& frame, const ProblemSpec& spec);

// Frozen potential: V-bar = v everywhere, no s-dependence.
RescaledPotential constant_potential(const SelfSimilarFrame& frame, double v);

// k = 0 gives E[w]; k in 1..3 gives E_{2k}[w]. Other k throw UnsupportedMoment.
// `nonlinear = false` drops the V-bar |w|^{p+1} term.
double energy_moment(const SelfSimilarFrame& frame, const RescaledPotential& vbar, int k,
                     bool nonlinear = true);

// E_2[w] - 1/2 int (|y|^2/2 - N) w^2 rho.
double tilde_E2(const SelfSimilarFrame& frame, const RescaledPotential& vbar);
double tilde_E2_correction(const SelfSimilarFrame& frame);

// psi(y) = chi(|y - center| / R) with chi = 1 on [0, 1], 0 beyond 2 and a
// quintic C^2 blend between. R = infinity means psi = 1.
struct CutoffSpec {
  double center = 0.0;
  double R = std::numeric_limits<double>::infinity();

  double value(double y) const;
  double derivative(double y) const;  // d psi / dy (radial derivative on radial grids)
};

struct LocalEnergies {
  double E_psi = 0.0;
  double script_E_psi = 0.0;
  double bridge = 0.0;           // int psi w (grad psi . grad w) rho
  double bridge_residual = 0.0;  // |E_psi - script_E_psi - bridge|
};

// Throws InvalidArgument when the cutoff support leaves the y-grid or is not
// centred at 0 on a radial grid.
LocalEnergies local_energies(const SelfSimilarFrame& frame, const RescaledPotential& vbar,
                             const CutoffSpec& cutoff);

enum class IdentityId { Var, WVar, Dissipation, Pohozaev };
std::string to_string(IdentityId id);

struct IdentityOptions {
  int k = 1;        // moment of the wvar identity
  double c2 = 0.0;  // Pohozaev constant
  double spacing_rtol = 1e-4;
};

// |LHS - RHS| of the chosen identity from two or three consecutive frames on a
// shared y-grid. Three frames: centred differences at the middle frame. Two
// frames: everything at the midpoint in s. Throws InvalidArgument for unequal
// s-spacing, mismatched grids, or Pohozaev on an interval frame.
double identity_residual(std::span<const SelfSimilarFrame> frames, std::span<const RescaledPotential> vbar,
                         IdentityId id, const IdentityOptions& opts = {});

// Signed LHS - RHS of the Pohozaev identity with c2 = 0, and the coefficient
// int |grad w|^2 rho that multiplies c2.
struct PohozaevParts {
  double defect = 0.0;
  double gradient_mass = 0.0;
};
PohozaevParts pohozaev_parts(std::span<const SelfSimilarFrame> frames, std::span<const RescaledPotential> vbar);

// Least-squares c2 over every interior frame of the sequence.
double fit_pohozaev_c2(std::span<const SelfSimilarFrame> frames, std::span<const RescaledPotential> vbar);

// max_j (E_{j+1} - E_j), clamped at 0.
double monotonicity_defect(std::span<const double> energies);

struct LimitSample {
  double s = 0.0;
  double deviation = 0.0;
};

// max over |y| <= 1 of |w - k(a)| per frame.
std::vector<LimitSample> limit_convergence_check(std::span<const SelfSimilarFrame> frames, double a,
                                                 const ProblemSpec& spec);

// True when the last three deviations are non-increasing up to a factor
// (1 + slack) per step.
bool limit_trend_ok(std::span<const LimitSample> series, double slack = 0.2);

struct EnergyRow {
  double s = 0.0;
  double E = 0.0;
  double E2 = 0.0;
  double E4 = 0.0;
  double E6 = 0.0;
  double tildeE2 = 0.0;
  double res_var = 0.0;
  double res_wvar1 = 0.0;
  double res_dissipation = 0.0;
  double res_pohozaev = 0.0;  // 0 on interval frames
  double dev_core = 0.0;
  std::vector<LocalEnergies> local;
};

struct EnergyReport {
  double a = 0.0;
  double k_a = 0.0;
  double pohozaev_c2 = 0.0;
  bool pohozaev_applicable = true;
  std::vector<EnergyRow> rows;
};

// Needs at least three equally spaced frames. End rows take their residuals
// from the adjacent frame pair.
EnergyReport build_energy_report(std::span<const SelfSimilarFrame> frames, const ProblemSpec& spec,
                                 std::span<const CutoffSpec> cutoffs = {});

// Throws InvalidArgument when V is not constant.
double monotonicity_check_constV(const EnergyReport& report, const ProblemSpec& spec);

std::string energy_report_csv(const EnergyReport& report);

// Equally spaced s-values and their physical times t = T - e^{-s}.
struct FramePlan {
  double s_start = 0.0;
  double s_end = 0.0;
  int count = 11;

  std::vector<double> s_values() const;
  std::vector<double> times(double T) const;
};

// Ends where one x-cell spans 0.1 in y; spans five units of s, starting no
// earlier than half a unit after s0 = -log T.
FramePlan default_frame_plan(double T, double h, int count);

// Snapshots whose time matches one of `times` to rounding, in time order.
std::vector<Field> select_snapshots(const Trajectory& traj, std::span<const double> times);

std::vector<SelfSimilarFrame> build_frames(std::span<const Field> snapshots, const ProblemSpec& spec, double a,
                                           double T, const GridPtr& y_grid);

// y-grid matching the problem geometry: radial of dimension N, or the
// symmetric interval.
GridPtr build_y_grid(const ProblemSpec& spec, double y_max, int m_y);

}  // namespace blowup_lab
