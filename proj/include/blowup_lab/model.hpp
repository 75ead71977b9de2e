#pragma once

#include <string>
#include <vector>

#include "blowup_lab/mesh.hpp"

namespace blowup_lab {

enum class FunctionKind { Constant, GaussianBump, CosineCap, Table };

// Closed-form scalar profile of one spatial variable (x on an interval, r on a
// ball).
//   constant:      value
//   gaussian_bump: base + amp * exp(-(x - center)^2 / width)
//   cosine_cap:    cos(pi x / (2 extent)), zero at |x| >= extent
//   table:         piecewise-linear through (nodes, values)
struct FunctionSpec {
  FunctionKind kind = FunctionKind::Constant;
  double value = 1.0;
  double base = 0.0;
  double amp = 0.0;
  double center = 0.0;
  double width = 1.0;
  double extent = 1.0;  // cosine_cap only; set from the problem domain
  std::vector<double> nodes;
  std::vector<double> values;

  static FunctionSpec constant(double v);
  static FunctionSpec gaussian_bump(double base, double amp, double center, double width);
  static FunctionSpec cosine_cap(double extent);
  static FunctionSpec table(std::vector<double> nodes, std::vector<double> values);

  double operator()(double x) const;
  double derivative(double x) const;

  bool operator==(const FunctionSpec&) const = default;
};

std::string to_string(FunctionKind kind);
FunctionKind function_kind_from_string(const std::string& name);

enum class DomainKind { Interval, Ball };

struct ProblemSpec {
  int N = 3;
  double p = 2.0;
  DomainKind domain = DomainKind::Ball;
  double extent = 1.0;  // L for interval(L), R for ball(R)
  FunctionSpec potential = FunctionSpec::constant(1.0);
  FunctionSpec profile = FunctionSpec::cosine_cap(1.0);
  double potential_floor = 1e-6;

  double beta() const { return 1.0 / (p - 1.0); }
  GridKind grid_kind() const {
    return domain == DomainKind::Interval ? GridKind::Interval : GridKind::Radial;
  }
  bool subcritical() const;

  bool operator==(const ProblemSpec&) const = default;
};

GridPtr build_problem_grid(const ProblemSpec& spec, int m);

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<HypothesisCheck> checks;
  std::vector<std::string> warnings;
  bool theorem3_applicable = true;
};

// Hard failures (p <= 1, V below the floor, phi non-positive inside or nonzero
// on the boundary) throw InvalidProblem. A supercritical exponent only adds the
// warning "theorem3_inapplicable".
ValidationReport validate_spec(const ProblemSpec& spec, const Grid& grid);

struct AResult {
  double A = 0.0;
  double maximizer = 0.0;
  double max_value = 0.0;  // max of phi^{p-1} V
};

// Dense scan of phi^{p-1} V; `samples` intervals across the domain. Ties go to
// the smallest coordinate.
AResult compute_A(const ProblemSpec& spec, int samples);

// Scan at 16x the solver grid resolution.
AResult compute_A(const ProblemSpec& spec, const Grid& grid);

// Diffusionless blow-up time A M^{1-p} / (p - 1).
double ode_reference_time(double A, double p, double M);
double ode_reference_time(const ProblemSpec& spec, double M);

// ((p - 1) V(a))^{-1/(p-1)}.
double limit_constant_k(const ProblemSpec& spec, double a);

}  // namespace blowup_lab
