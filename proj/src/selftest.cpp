#include "blowup_lab/selftest.hpp"

#include <cmath>
#include <numbers>

#include "blowup_lab/blowup.hpp"
#include "blowup_lab/integrator.hpp"

namespace blowup_lab {

namespace {

SelftestCase relative_case(std::string name, double got, double want, double tol) {
  SelftestCase c;
  c.name = std::move(name);
  c.error = std::abs(got - want) / std::abs(want);
  c.tolerance = tol;
  c.passed = c.error <= tol;
  return c;
}

SelftestCase gaussian_quadrature(int N) {
  const GridKind kind = N == 1 ? GridKind::Interval : GridKind::Radial;
  const GridPtr g = build_grid(kind, N, 16.0, 1024);
  const Field one = sample(g, [](double) { return 1.0; });
  const double want = std::pow(4.0 * std::numbers::pi, 0.5 * N);
  return relative_case("quadrature_gaussian_N" + std::to_string(N), weighted_moment_integral(one, 0), want, 1e-6);
}

SelftestCase ode_blowup(double p) {
  ProblemSpec spec;
  spec.N = 1;
  spec.domain = DomainKind::Interval;
  spec.p = p;
  const double V = 2.0, u0 = 1.5;
  spec.potential = FunctionSpec::constant(V);
  SolverParams params;
  params.terms.diffusion = false;
  params.reaction_safety = 5e-4;
  const GridPtr g = build_problem_grid(spec, 16);
  const Trajectory traj = integrate(spec, sample(g, [&](double) { return u0; }), params);
  const double T = estimate_T(traj).T;
  const double want = std::pow(u0, 1.0 - p) / ((p - 1.0) * V);
  return relative_case("ode_blowup_time_p" + std::to_string(static_cast<int>(p)), T, want, 1e-6);
}

std::vector<SeriesEntry> power_law(double T, double C, double beta) {
  std::vector<SeriesEntry> s;
  for (int i = 0; i <= 400; ++i) {
    const double tau = T * std::pow(10.0, -8.0 * i / 400.0);
    s.push_back({T - tau, C * std::pow(tau, -beta), 0.0});
  }
  return s;
}

SelftestCase power_law_T(double p) {
  const double T = 0.37, beta = 1.0 / (p - 1.0);
  const auto s = power_law(T, 1.7, beta);
  return relative_case("estimate_T_power_law_p" + std::to_string(static_cast<int>(p)), estimate_T(s, p).T, T,
                       1e-10);
}

SelftestCase power_law_rate(double p) {
  const double T = 0.37, beta = 1.0 / (p - 1.0);
  const auto s = power_law(T, 1.7, beta);
  const double u_top = s.back().u_max;
  return relative_case("rate_exponent_power_law_p" + std::to_string(static_cast<int>(p)),
                       fit_rate_exponent(s, T, u_top / 1e3, u_top / 10.0), beta, 1e-9);
}

SelftestCase heat_decay() {
  ProblemSpec spec;
  spec.N = 1;
  spec.domain = DomainKind::Interval;
  SolverParams params;
  params.terms.reaction = false;
  const GridPtr g = build_problem_grid(spec, 256);
  const double pi = std::numbers::pi;
  const double t_end = 0.1;
  const Field u = integrate_until(spec, sample(g, [&](double x) { return std::sin(pi * x); }), params, t_end);
  double err = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i)
    err = std::max(err, std::abs(u[i] - std::exp(-pi * pi * t_end) * std::sin(pi * g->node(i))));
  SelftestCase c;
  c.name = "heat_decay_sin";
  c.error = err;
  c.tolerance = 1e-4;
  c.passed = err <= c.tolerance;
  return c;
}

}  // namespace

std::vector<SelftestCase> run_selftest() {
  return {gaussian_quadrature(1), gaussian_quadrature(3), ode_blowup(2.0), ode_blowup(3.0), power_law_T(2.0),
          power_law_T(3.0),       power_law_rate(2.0),    power_law_rate(3.0), heat_decay()};
}

}  // namespace blowup_lab
