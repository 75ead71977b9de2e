#include <algorithm>
#include <cmath>
#include <numbers>

#include "blowup_lab/blowup.hpp"
#include "blowup_lab/errors.hpp"
#include "blowup_lab/integrator.hpp"
#include "doctest.h"

using namespace blowup_lab;

namespace {

ProblemSpec unit_ball() {
  ProblemSpec s;
  s.N = 3;
  s.p = 2.0;
  s.domain = DomainKind::Ball;
  s.extent = 1.0;
  return s;
}

ProblemSpec unit_interval() {
  ProblemSpec s;
  s.N = 1;
  s.domain = DomainKind::Interval;
  s.extent = 1.0;
  return s;
}

// Time at which the series first reaches level u, linearly interpolated.
double crossing_time(const Trajectory& tr, double u) {
  for (std::size_t i = 1; i < tr.series.size(); ++i) {
    const auto& a = tr.series[i - 1];
    const auto& b = tr.series[i];
    if (b.u_max >= u) return a.t + (b.t - a.t) * (u - a.u_max) / (b.u_max - a.u_max);
  }
  FAIL("level never reached");
  return 0.0;
}

double u_max_at(const Trajectory& tr, double t) {
  const auto& s = tr.series;
  auto it = std::lower_bound(s.begin(), s.end(), t, [](const SeriesEntry& e, double v) { return e.t < v; });
  if (it == s.begin()) return it->u_max;
  if (it == s.end()) return s.back().u_max;
  const auto& a = *(it - 1);
  const auto& b = *it;
  return a.u_max + (b.u_max - a.u_max) * (t - a.t) / (b.t - a.t);
}

}  // namespace

TEST_SUITE("integrator") {

TEST_CASE("zero field takes the diffusion-limited step") {
  const ProblemSpec s = unit_ball();
  const GridPtr g = build_problem_grid(s, 128);
  SolverParams par;
  const double dt = choose_dt(Field(g), s, par);
  const LaplacianStencil st(*g);
  CHECK(dt == doctest::Approx(par.cfl_safety * g->spacing() * g->spacing() / (2.0 * st.dimension_factor())));
}

TEST_CASE("large data takes the reaction-limited step") {
  const ProblemSpec s = unit_ball();
  const GridPtr g = build_problem_grid(s, 128);
  SolverParams par;
  const Field u = sample(g, [](double r) { return 1e6 * std::cos(std::numbers::pi * r / 2.0); });
  const double dt = choose_dt(u, s, par);
  CHECK(dt == doctest::Approx(par.reaction_safety / (s.p * 1e6)).epsilon(1e-12));
  Field u2 = u;
  for (auto& v : u2.values) v *= 2.0;
  CHECK(choose_dt(u2, s, par) == doctest::Approx(dt / 2.0).epsilon(1e-12));
}

TEST_CASE("non-finite state is reported") {
  const ProblemSpec s = unit_ball();
  const GridPtr g = build_problem_grid(s, 32);
  Field u(g);
  u[3] = std::numeric_limits<double>::quiet_NaN();
  try {
    choose_dt(u, s, SolverParams{});
    FAIL("expected nan-state");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NanState);
  }
}

TEST_CASE("zero is a fixed point") {
  const ProblemSpec s = unit_ball();
  const GridPtr g = build_problem_grid(s, 64);
  const Field u = step_once(Field(g), 1e-5, s);
  for (double v : u.values) CHECK(v == 0.0);
}

TEST_CASE("midpoint step has third-order local error on the ODE") {
  ProblemSpec s = unit_interval();
  s.p = 3.0;
  const GridPtr g = build_problem_grid(s, 16);
  const double u0 = 1.3;
  const Field u = sample(g, [&](double) { return u0; });
  Terms terms;
  terms.diffusion = false;
  auto exact = [&](double t) { return std::pow(std::pow(u0, 1.0 - s.p) - (s.p - 1.0) * t, -1.0 / (s.p - 1.0)); };
  auto err = [&](double dt) { return std::abs(step_once(u, dt, s, terms)[8] - exact(dt)); };
  const double e1 = err(1e-2), e2 = err(5e-3), e3 = err(2.5e-3);
  CHECK(e1 / e2 == doctest::Approx(8.0).epsilon(0.1));
  CHECK(e2 / e3 == doctest::Approx(8.0).epsilon(0.05));
  const Field v = step_once(u, 1e-3, s, terms);
  CHECK(v[0] == 0.0);
  CHECK(v[g->size() - 1] == 0.0);
}

TEST_CASE("heat equation decay of sin(pi x)") {
  const ProblemSpec s = unit_interval();
  const GridPtr g = build_problem_grid(s, 512);
  SolverParams par;
  par.terms.reaction = false;
  const double pi = std::numbers::pi;
  const Field u = integrate_until(s, sample(g, [&](double x) { return std::sin(pi * x); }), par, 0.1);
  CHECK(u.time == doctest::Approx(0.1).epsilon(1e-14));
  double err = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i)
    err = std::max(err, std::abs(u[i] - std::exp(-pi * pi * 0.1) * std::sin(pi * g->node(i))));
  CHECK(err <= 1e-4);
}

TEST_CASE("solver parameters are validated") {
  SolverParams par;
  par.cfl_safety = 0.0;
  CHECK_THROWS_AS(par.validate(), Error);
  par = SolverParams{};
  par.u_stop = 1e3;
  CHECK_THROWS_AS(par.validate(), Error);
  par = SolverParams{};
  par.reaction_safety = 1.5;
  CHECK_THROWS_AS(par.validate(), Error);
  CHECK_NOTHROW(SolverParams{}.validate());
}

TEST_CASE("large data blows up with a well-formed trajectory") {
  const ProblemSpec s = unit_ball();
  const GridPtr g = build_problem_grid(s, 256);
  const Trajectory tr = run_to_blowup(s, 50.0, g, SolverParams{});
  CHECK(tr.stop_reason == StopReason::Threshold);
  REQUIRE(tr.series.size() > 30);
  for (std::size_t i = 1; i < tr.series.size(); ++i) CHECK(tr.series[i].t > tr.series[i - 1].t);
  std::size_t tail = 0;
  for (const auto& e : tr.series) tail += e.u_max >= tr.u_stop / 10.0;
  CHECK(tail >= 30);
  for (const auto& snap : tr.snapshots) {
    CHECK(*std::min_element(snap.values.begin(), snap.values.end()) >= 0.0);
    CHECK(std::any_of(tr.series.begin(), tr.series.end(), [&](const SeriesEntry& e) { return e.t == snap.time; }));
  }
  const TimeEstimate est = estimate_T(tr);
  CHECK(est.T > tr.series.back().t);
}

TEST_CASE("tiny data is flagged as a likely global solution") {
  const ProblemSpec s = unit_ball();
  const GridPtr g = build_problem_grid(s, 64);
  SolverParams par;
  par.max_steps = 20000;
  try {
    run_to_blowup(s, 1e-6, g, par);
    FAIL("expected likely-global-solution");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LikelyGlobalSolution);
  }
}

TEST_CASE("resolution doubling barely shifts the final decade") {
  const ProblemSpec s = unit_ball();
  const Trajectory a = run_to_blowup(s, 50.0, build_problem_grid(s, 256), SolverParams{});
  const Trajectory b = run_to_blowup(s, 50.0, build_problem_grid(s, 512), SolverParams{});
  for (double level : {1e7, 3e7, 9e7}) {
    const double ta = crossing_time(a, level), tb = crossing_time(b, level);
    CHECK(std::abs(ta - tb) <= 0.02 * tb);
  }
}

TEST_CASE("blow-up time converges at better than first order") {
  const ProblemSpec s = unit_ball();
  double T[3];
  int i = 0;
  for (int m : {128, 256, 512}) T[i++] = estimate_T(run_to_blowup(s, 50.0, build_problem_grid(s, m), {})).T;
  const double order = std::log2(std::abs(T[1] - T[0]) / std::abs(T[2] - T[1]));
  CHECK(order >= 1.5);
}

TEST_CASE("larger data never gives a smaller maximum") {
  const ProblemSpec s = unit_ball();
  const GridPtr g = build_problem_grid(s, 128);
  const Trajectory lo = run_to_blowup(s, 40.0, g, SolverParams{});
  const Trajectory hi = run_to_blowup(s, 50.0, g, SolverParams{});
  CHECK(hi.series.back().t < lo.series.back().t);
  for (const auto& e : lo.series) {
    if (e.t > hi.series.back().t) break;
    CHECK(u_max_at(hi, e.t) >= e.u_max * (1.0 - 1e-3));
  }
}

TEST_CASE("nonnegative data stays nonnegative on an off-centre problem") {
  ProblemSpec s = unit_interval();
  s.potential = FunctionSpec::gaussian_bump(1.0, 1.0, 0.3, 0.01);
  const Trajectory tr = run_to_blowup(s, 30.0, build_problem_grid(s, 256), SolverParams{});
  for (const auto& snap : tr.snapshots) CHECK(*std::min_element(snap.values.begin(), snap.values.end()) >= 0.0);
}

}  // TEST_SUITE
