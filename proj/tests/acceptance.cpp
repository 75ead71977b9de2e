// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "blowup_lab/blowup.hpp"
#include "blowup_lab/errors.hpp"
#include "blowup_lab/selfsim.hpp"
#include "blowup_lab/selftest.hpp"
#include "blowup_lab/sweep.hpp"

using namespace blowup_lab;

namespace {

const double pi = std::numbers::pi;

struct Verdict {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int failures = 0;

void report(const char* id, const char* title, const Verdict& v, double secs) {
  std::printf("%s %s  %s: %s (%.1f s)\n", id, v.pass ? "PASS" : "FAIL", title, v.detail.c_str(), secs);
  std::fflush(stdout);
  failures += !v.pass;
}

void guarded(const char* id, const char* title, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail = std::string("exception: ") + e.what();
  }
  report(id, title, v, seconds_since(t0));
}

ProblemSpec ball_problem(double p) {
  ProblemSpec s;
  s.N = 3;
  s.p = p;
  s.domain = DomainKind::Ball;
  s.extent = 1.0;
  s.potential = FunctionSpec::constant(1.0);
  s.profile = FunctionSpec::cosine_cap(1.0);
  return s;
}

// u_max = C (T - t)^{-beta} on log-spaced remaining times.
std::vector<SeriesEntry> power_law(double T, double C, double beta) {
  std::vector<SeriesEntry> s;
  for (int i = 0; i <= 2000; ++i) {
    const double t = T - T * std::pow(10.0, -8.0 * i / 2000.0);
    s.push_back({t, C * std::pow(T - t, -beta), 0.0});
  }
  return s;
}

// Second solver pass that lands exactly on the planned frame times for T1.
std::vector<SelfSimilarFrame> frames_for(const ProblemSpec& spec, double M, const GridPtr& grid, double T1,
                                         const FramePlan& plan, double y_max, int m_y) {
  SolverParams par;
  const std::vector<double> times = plan.times(T1);
  par.snapshot_times = times;
  const Trajectory tr = run_to_blowup(spec, M, grid, par);
  const auto snaps = select_snapshots(tr, times);
  return build_frames(snaps, spec, 0.0, T1, build_y_grid(spec, y_max, m_y));
}

std::vector<RescaledPotential> potentials(const std::vector<SelfSimilarFrame>& frames, const ProblemSpec& spec) {
  std::vector<RescaledPotential> v;
  for (const auto& f : frames) v.push_back(rescaled_potential(f, spec));
  return v;
}

double residual_at(const std::vector<SelfSimilarFrame>& frames, const std::vector<RescaledPotential>& v,
                   std::size_t j, IdentityId id) {
  return identity_residual(std::span(frames).subspan(j - 1, 3), std::span(v).subspan(j - 1, 3), id);
}

// Shared state of the p = 2 ball run.
struct BallRun {
  ProblemSpec spec = ball_problem(2.0);
  GridPtr grid;
  double T1 = 0.0;
  std::vector<SelfSimilarFrame> frames;
  EnergyReport energy;
};

}  // namespace

int main() {
  const auto suite_start = std::chrono::steady_clock::now();

  guarded("AC-1", "diffusionless blow-up time", [] {
    Verdict v;
    for (double p : {2.0, 3.0}) {
      const auto t0 = std::chrono::steady_clock::now();
      ProblemSpec s;
      s.N = 1;
      s.domain = DomainKind::Interval;
      s.p = p;
      const double V = 1.5, u0 = 2.0;
      s.potential = FunctionSpec::constant(V);
      SolverParams par;
      par.terms.diffusion = false;
      par.reaction_safety = 5e-4;
      const GridPtr g = build_problem_grid(s, 16);
      const double T = estimate_T(integrate(s, sample(g, [&](double) { return u0; }), par)).T;
      const double exact = std::pow(u0, 1.0 - p) / ((p - 1.0) * V);
      const double rel = std::abs(T - exact) / exact;
      const double secs = seconds_since(t0);
      v.require(rel <= 1e-6, "p=" + fmt("%g", p) + " rel err " + fmt("%.2e", rel));
      v.require(secs < 1.0, "runtime " + fmt("%.3f", secs) + " s");
    }
    return v;
  });

  BallRun ball;
  ball.grid = build_problem_grid(ball.spec, 2048);

  guarded("AC-2", "blow-up rate and type-I plateau, m=2048", [&] {
    Verdict v;
    for (double p : {2.0, 3.0}) {
      const auto t0 = std::chrono::steady_clock::now();
      const ProblemSpec s = ball_problem(p);
      const Trajectory tr = run_to_blowup(s, 50.0, ball.grid, SolverParams{});
      const double T = estimate_T(tr).T;
      const double beta = 1.0 / (p - 1.0);
      const double rate = fit_rate_exponent(tr, T);
      const double plateau = typeI_plateau_ratio(tr, T);
      const double secs = seconds_since(t0);
      if (p == 2.0) ball.T1 = T;
      const std::string tag = "p=" + fmt("%g", p) + " ";
      v.require(std::abs(rate - beta) <= 0.05 * beta, tag + "rate " + fmt("%.4f", rate) + " vs " + fmt("%g", beta));
      v.require(plateau <= 1.2, tag + "plateau " + fmt("%.4f", plateau));
      v.require(secs < 300.0, tag + "runtime " + fmt("%.0f", secs) + " s");
    }
    return v;
  });

  guarded("AC-3", "T(M) M^{p-1} approaches A/(p-1), Ms={8,16,32,64}", [&] {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    SolverParams par;
    par.max_steps = 20'000'000;
    const SweepReport rep = run_sweep(ball.spec, ball.grid, par, {8, 16, 32, 64}, 4);
    const double secs = seconds_since(t0);
    const double target = 1.0 / (ball.spec.p - 1.0);  // A = 1 for V = 1, max phi = 1
    v.require(std::abs(rep.target - target) <= 1e-12, "target " + fmt("%.6f", rep.target));
    v.require(rep.rows.size() >= 3, fmt("%.0f", static_cast<double>(rep.rows.size())) + " blow-up rows");
    if (rep.rows.size() >= 3) {
      const Theorem2Check c = check_theorem2(rep, 0.1);
      std::string ms;
      for (std::size_t j = 0; j < rep.rows.size(); ++j)
        ms += (j ? " " : "") + fmt("%g", rep.rows[j].M) + ":" + fmt("%.4f", rep.rows[j].TMp1);
      v.require(true, "T M^{p-1} " + ms);
      v.require(c.within_tolerance, "relative deviation at M=64 " + fmt("%.4f", c.relative_deviation) + " <= 0.1");
      v.require(c.trend, "non-increasing over last three rows");
    }
    v.require(secs < 1200.0, "runtime " + fmt("%.0f", secs) + " s");
    return v;
  });

  guarded("AC-4", "energy monotonicity for constant V", [&] {
    Verdict v;
    const FramePlan plan = default_frame_plan(ball.T1, ball.grid->spacing(), 11);
    ball.frames = frames_for(ball.spec, 50.0, ball.grid, ball.T1, plan, 16.0, 1024);
    ball.energy = build_energy_report(ball.frames, ball.spec);
    const double E0 = ball.energy.rows.front().E;
    const double defect = monotonicity_check_constV(ball.energy, ball.spec);
    bool bounded = true;
    for (const auto& r : ball.energy.rows) bounded = bounded && r.E <= E0 && r.E >= -10.0 * std::abs(E0);
    v.require(defect <= 1e-3 * std::abs(E0), "defect " + fmt("%.2e", defect) + " vs E(s0) " + fmt("%.6f", E0));
    v.require(bounded, "E in [-10|E(s0)|, E(s0)] over s in [" + fmt("%.2f", plan.s_start) + ", " +
                           fmt("%.2f", plan.s_end) + "], E(s_end) " + fmt("%.6f", ball.energy.rows.back().E));
    return v;
  });

  guarded("AC-5", "core convergence of w to k(a)", [&] {
    Verdict v;
    const double k = limit_constant_k(ball.spec, 0.0);
    const auto dev = limit_convergence_check(ball.frames, 0.0, ball.spec);
    // Independent trend check on the last three deviations.
    const std::size_t n = dev.size();
    const bool trend = n >= 3 && dev[n - 2].deviation <= 1.2 * dev[n - 3].deviation &&
                       dev[n - 1].deviation <= 1.2 * dev[n - 2].deviation;
    v.require(dev.back().deviation <= 0.1 * k,
              "final deviation " + fmt("%.4f", dev.back().deviation) + " at s=" + fmt("%.2f", dev.back().s) +
                  " vs 0.1 k(a) = " + fmt("%.3f", 0.1 * k));
    v.require(trend, "last three non-increasing within 20%");
    return v;
  });

  guarded("AC-6", "blow-up point under an off-centre potential bump", [&] {
    Verdict v;
    ProblemSpec s;
    s.N = 1;
    s.domain = DomainKind::Interval;
    s.p = 2.0;
    s.potential = FunctionSpec::gaussian_bump(1.0, 1.0, 0.3, 0.01);
    s.profile = FunctionSpec::cosine_cap(1.0);
    const GridPtr g = build_problem_grid(s, 2048);
    // Dense scan oracle independent of the library scan; best = max phi V = 1/A.
    double best = -1.0, xbar = 0.0;
    for (int i = 0; i <= 200000; ++i) {
      const double x = -1.0 + 2.0 * i / 200000.0;
      const double val = std::cos(pi * x / 2.0) * (1.0 + std::exp(-(x - 0.3) * (x - 0.3) / 0.01));
      if (val > best) {
        best = val;
        xbar = x;
      }
    }
    const SweepReport rep = run_sweep(s, g, SolverParams{}, {8, 16, 32, 64}, 4);
    v.require(rep.rows.size() == 4, fmt("%.0f", static_cast<double>(rep.rows.size())) + " rows");
    const double slack = rep.scan_slack + 1e-9;
    bool nonneg = true;
    std::string ms;
    for (const auto& r : rep.rows) {
      const double m3 = best - std::cos(pi * r.a / 2.0) * (1.0 + std::exp(-(r.a - 0.3) * (r.a - 0.3) / 0.01));
      nonneg = nonneg && m3 >= -slack;
      ms += (ms.empty() ? "" : " ") + fmt("%g", r.M) + ":" + fmt("%.2e", m3);
    }
    v.require(nonneg, "margin3 >= -slack (" + ms + ")");
    if (rep.rows.size() == 4) {
      const auto m3 = [&](const SweepRow& r) { return best - r.phiV_at_a; };
      v.require(m3(rep.rows.back()) < m3(rep.rows.front()), "margin3(64) < margin3(8)");
      const double dist = std::abs(rep.rows.back().a - xbar) / g->spacing();
      v.require(dist <= 5.0, "|a - xbar| = " + fmt("%.2f", dist) + " h at M=64");
    }
    return v;
  });

  guarded("AC-7", "identity residuals under (ds, h) halving and on steady frames", [&] {
    Verdict v;
    const ProblemSpec& s = ball.spec;
    const GridPtr coarse_grid = build_problem_grid(s, 1024);
    const double Tc = estimate_T(run_to_blowup(s, 50.0, coarse_grid, SolverParams{})).T;
    const auto coarse = frames_for(s, 50.0, coarse_grid, Tc, FramePlan{5.0, 9.5, 11}, 16.0, 512);
    const auto fine = frames_for(s, 50.0, ball.grid, ball.T1, FramePlan{5.0, 9.5, 21}, 16.0, 1024);
    const auto vc = potentials(coarse, s), vf = potentials(fine, s);
    for (IdentityId id : {IdentityId::Var, IdentityId::WVar, IdentityId::Dissipation}) {
      double rc = 0.0, rf = 0.0;
      for (std::size_t j = 1; j + 1 < coarse.size(); ++j) {
        rc = std::max(rc, residual_at(coarse, vc, j, id));
        rf = std::max(rf, residual_at(fine, vf, 2 * j, id));
      }
      v.require(rc >= 2.0 * rf, to_string(id) + " " + fmt("%.2e", rc) + " -> " + fmt("%.2e", rf) + " (x" +
                                    fmt("%.1f", rc / rf) + ")");
    }

    // Steady frames: w = k(a) at every s with V frozen.
    ProblemSpec wide = s;
    wide.extent = 1e4;
    wide.profile = FunctionSpec::cosine_cap(1e4);
    const GridPtr xg = build_problem_grid(wide, 64);
    const GridPtr yg = build_y_grid(wide, 16.0, 1024);
    const double k = limit_constant_k(wide, 0.0);
    std::vector<SelfSimilarFrame> steady;
    for (double sv : {5.0, 5.5, 6.0}) {
      const double tau = std::exp(-sv);
      const double u = k / tau;
      steady.push_back(to_selfsimilar_frame(sample(xg, [&](double) { return u; }, 1.0 - tau), wide, 0.0, 1.0, yg));
    }
    std::vector<RescaledPotential> vs;
    for (const auto& f : steady) vs.push_back(constant_potential(f, 1.0));
    double worst = 0.0;
    for (IdentityId id : {IdentityId::Var, IdentityId::WVar, IdentityId::Dissipation})
      worst = std::max(worst, identity_residual(steady, vs, id));
    v.require(worst <= 1e-10, "steady residual " + fmt("%.2e", worst));
    return v;
  });

  guarded("AC-8", "oracles and selftest", [] {
    Verdict v;
    for (int N : {1, 3}) {
      const GridPtr g = build_grid(N == 1 ? GridKind::Interval : GridKind::Radial, N, 16.0, 4096);
      const double q = weighted_moment_integral(sample(g, [](double) { return 1.0; }), 0);
      const double exact = std::pow(4.0 * pi, 0.5 * N);
      v.require(std::abs(q - exact) / exact <= 1e-6, "Gaussian N=" + fmt("%g", N) + " rel " +
                                                         fmt("%.1e", std::abs(q - exact) / exact));
    }
    for (double p : {2.0, 3.0}) {
      const double T = 0.5;
      const double err = std::abs(estimate_T(power_law(T, 2.0, 1.0 / (p - 1.0)), p).T - T);
      v.require(err <= 1e-10, "power law p=" + fmt("%g", p) + " T err " + fmt("%.1e", err));
    }
    {
      ProblemSpec s;
      s.N = 1;
      s.domain = DomainKind::Interval;
      SolverParams par;
      par.terms.reaction = false;
      const GridPtr g = build_problem_grid(s, 512);
      const Field u = integrate_until(s, sample(g, [](double x) { return std::sin(pi * x); }), par, 0.1);
      double err = 0.0;
      for (std::size_t i = 0; i < g->size(); ++i)
        err = std::max(err, std::abs(u[i] - std::exp(-pi * pi * 0.1) * std::sin(pi * g->node(i))));
      v.require(err <= 1e-4, "heat decay err " + fmt("%.1e", err));
    }
    const auto t0 = std::chrono::steady_clock::now();
    const auto cases = run_selftest();
    const double secs = seconds_since(t0);
    bool all = true;
    for (const auto& c : cases) all = all && c.passed;
    v.require(all, "selftest " + fmt("%.0f", static_cast<double>(cases.size())) + " cases");
    v.require(secs < 10.0, "selftest runtime " + fmt("%.2f", secs) + " s");
    return v;
  });

  std::printf("acceptance: %d failed, total %.0f s\n", failures, seconds_since(suite_start));
  return failures == 0 ? 0 : 1;
}
