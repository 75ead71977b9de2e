#include "blowup_lab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "blowup_lab/blowup.hpp"
#include "blowup_lab/config.hpp"
#include "blowup_lab/errors.hpp"
#include "blowup_lab/selfsim.hpp"
#include "blowup_lab/selftest.hpp"
#include "blowup_lab/sweep.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace blowup_lab {

namespace {

using nlohmann::json;

struct Options {
  std::string config_path;
  std::string out_dir;
  int workers = 0;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InsufficientData, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path output_dir(const Config& cfg, const Options& opt) {
  if (!opt.out_dir.empty()) return opt.out_dir;
  if (const char* env = std::getenv("BLOWUP_LAB_OUT"); env && *env) return env;
  return cfg.output.dir;
}

std::string series_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "t,u_max,argmax\n";
  char buf[96];
  for (const auto& e : traj.series) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", e.t, e.u_max, e.argmax);
    out << buf;
  }
  return out.str();
}

std::string field_csv(const Field& f) {
  std::ostringstream out;
  out << "x,u\n";
  char buf[96];
  for (std::size_t i = 0; i < f.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", f.grid->node(i), f.values[i]);
    out << buf;
  }
  return out.str();
}

Field read_field_csv(const fs::path& path, const GridPtr& grid, double t) {
  std::istringstream in(read_text(path));
  std::string line;
  std::getline(in, line);
  if (line != "x,u") throw Error(ErrorKind::InsufficientData, path.string() + " lacks the x,u header");
  Field f(grid, t);
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (i >= grid->size()) throw Error(ErrorKind::InsufficientData, path.string() + " has more rows than the grid");
    double x = 0, u = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf", &x, &u) != 2)
      throw Error(ErrorKind::InsufficientData, "malformed row in " + path.string());
    if (std::abs(x - grid->node(i)) > 1e-9 * grid->extent())
      throw Error(ErrorKind::InsufficientData, path.string() + " does not match the configured grid");
    f.values[i++] = u;
  }
  if (i != grid->size()) throw Error(ErrorKind::InsufficientData, path.string() + " has fewer rows than the grid");
  return f;
}

FramePlan frame_plan(const Config& cfg, double T, double h) {
  if (cfg.selfsim.s_start) {
    FramePlan plan;
    plan.s_start = *cfg.selfsim.s_start;
    plan.s_end = *cfg.selfsim.s_end;
    plan.count = cfg.selfsim.frame_count;
    return plan;
  }
  return default_frame_plan(T, h, cfg.selfsim.frame_count);
}

void print_warnings(const ValidationReport& vr, std::ostream& err) {
  for (const auto& w : vr.warnings) err << "warning: " << w << "\n";
}

int cmd_run(const Config& cfg, const Options& opt, std::ostream& out, std::ostream& err) {
  const ProblemSpec& spec = cfg.problem;
  const GridPtr grid = build_problem_grid(spec, cfg.solver.m);
  print_warnings(validate_spec(spec, *grid), err);
  SolverParams params = cfg.solver.params();

  Trajectory traj;
  try {
    traj = run_to_blowup(spec, cfg.M, grid, params);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::LikelyGlobalSolution) throw;
    out << "no blow-up: " << e.what() << "\n";
    return 1;
  }
  const double T1 = estimate_T(traj).T;

  // Second pass with snapshots at equally spaced s for the energy diagnostics.
  std::vector<double> frame_times;
  std::vector<double> frame_s;
  try {
    const FramePlan plan = frame_plan(cfg, T1, grid->spacing());
    frame_times = plan.times(T1);
    frame_s = plan.s_values();
    params.snapshot_times = frame_times;
    traj = run_to_blowup(spec, cfg.M, grid, params);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidArgument && e.kind() != ErrorKind::InvalidTime) throw;
    err << "warning: no self-similar frames scheduled (" << e.what() << ")\n";
    frame_times.clear();
    frame_s.clear();
  }
  const BlowupRecord rec = analyze(traj);

  const fs::path dir = output_dir(cfg, opt);
  fs::create_directories(dir);
  write_text(dir / "config.ini", serialize_config(cfg));
  if (cfg.output.wants("csv")) {
    write_text(dir / "trajectory.csv", series_csv(traj));
    json manifest;
    manifest["frame_T"] = T1;
    manifest["frame_s"] = frame_s;
    manifest["snapshots"] = json::array();
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
      const Field& f = traj.snapshots[i];
      char name[32];
      std::snprintf(name, sizeof name, "snap_%03zu.csv", i);
      write_text(dir / "snapshots" / name, field_csv(f));
      const bool is_frame = std::find(frame_times.begin(), frame_times.end(), f.time) != frame_times.end();
      manifest["snapshots"].push_back({{"file", std::string("snapshots/") + name}, {"t", f.time}, {"frame", is_frame}});
    }
    write_text(dir / "snapshots.json", manifest.dump(2));
  }
  if (cfg.output.wants("json")) write_text(dir / "blowup_record.json", to_json(rec));

  const double A = compute_A(spec, *grid).A;
  out << "T_est = " << fmt("%.12g", rec.T_est) << " +- " << fmt("%.3g", rec.T_ci) << "\n";
  out << "T M^{p-1} (p-1) / A = " << fmt("%.6f", rec.T_est * std::pow(cfg.M, spec.p - 1.0) * (spec.p - 1.0) / A)
      << "\n";
  out << "a = " << fmt("%.6g", rec.a) << (rec.location_settled ? "" : " (not settled)") << "\n";
  out << "rate exponent = " << fmt("%.5f", rec.rate_exponent) << " (beta = " << fmt("%.5f", spec.beta()) << ")\n";
  out << "type-I sup = " << fmt("%.5f", rec.typeI_sup) << "\n";
  out << "steps = " << traj.steps << ", snapshots = " << traj.snapshots.size() << ", frames = " << frame_times.size()
      << "\n";
  out << "output: " << dir.string() << "\n";
  return 0;
}

void print_sweep(const SweepReport& rep, std::ostream& out) {
  out << "A = " << fmt("%.10g", rep.A) << ", target A/(p-1) = " << fmt("%.10g", rep.target) << "\n";
  out << "       M          T_est        T_ci      TMp1  (TMp1-target)/target          a    phiV(a)     rate\n";
  for (const auto& r : rep.rows) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%8.3g %14.9g %11.3g %9.5f %22.5f %10.6f %10.6f %8.5f%s\n", r.M, r.T_est, r.T_ci,
                  r.TMp1, (r.TMp1 - rep.target) / rep.target, r.a, r.phiV_at_a, r.rate_exponent,
                  r.location_flagged ? "  (a flagged)" : "");
    out << buf;
  }
  for (const auto& n : rep.notes) out << "note: " << n << "\n";
}

int cmd_sweep(const Config& cfg, const Options& opt, std::ostream& out, std::ostream& err) {
  const ProblemSpec& spec = cfg.problem;
  const GridPtr grid = build_problem_grid(spec, cfg.solver.m);
  print_warnings(validate_spec(spec, *grid), err);
  const int workers = opt.workers > 0 ? opt.workers : cfg.sweep.workers;
  const SweepReport rep = run_sweep(spec, grid, cfg.solver.params(), cfg.sweep.Ms, workers);
  print_sweep(rep, out);

  const fs::path dir = output_dir(cfg, opt);
  if (cfg.output.wants("csv")) write_text(dir / "sweep.csv", sweep_csv(rep));
  if (rep.rows.size() < 3) {
    out << "checks: only " << rep.rows.size() << " row(s); at least three are needed\n";
    return 1;
  }
  const Theorem2Check t2 = check_theorem2(rep, cfg.sweep.theorem2_tolerance);
  std::optional<Theorem3Check> t3;
  if (rep.subcritical) t3 = check_theorem3(rep);
  if (cfg.output.wants("json")) write_text(dir / "sweep_summary.json", sweep_summary_json(rep, t2, t3));

  out << "margins2:";
  for (double m : t2.margins) out << " " << fmt("%.6g", m);
  out << "\n";
  out << "theorem2 tolerance (" << fmt("%.3g", cfg.sweep.theorem2_tolerance) << "): relative deviation "
      << fmt("%.4f", t2.relative_deviation) << (t2.within_tolerance ? " pass" : " FAIL") << "\n";
  out << "theorem2 trend: " << (t2.trend ? "pass" : "FAIL") << "\n";
  bool ok = t2.pass();
  if (t3) {
    out << "margins3:";
    for (double m : t3->margins) out << " " << fmt("%.6g", m);
    out << "\n";
    if (t3->fitted_decay_exponent)
      out << "fitted decay exponent " << fmt("%.4f", *t3->fitted_decay_exponent) << " (reference (p-1)/4 = "
          << fmt("%.4f", t3->expected_exponent) << ")\n";
    out << "theorem3 nonnegative: " << (t3->nonnegative ? "pass" : "FAIL") << ", shrinking: "
        << (t3->shrinking ? "pass" : "FAIL") << ", location: " << (t3->location ? "pass" : "FAIL") << "\n";
    ok = ok && t3->pass();
  } else {
    out << "theorem3 checks skipped: supercritical exponent\n";
  }
  return ok ? 0 : 1;
}

int cmd_energy(const Config& cfg, const Options& opt, std::ostream& out, std::ostream&) {
  const ProblemSpec& spec = cfg.problem;
  const fs::path dir = output_dir(cfg, opt);
  const json manifest = json::parse(read_text(dir / "snapshots.json"));
  const double T = manifest.at("frame_T").get<double>();
  double a = 0.0;
  if (spec.domain == DomainKind::Interval)
    a = blowup_record_from_json(read_text(dir / "blowup_record.json")).a;

  const GridPtr grid = build_problem_grid(spec, cfg.solver.m);
  std::vector<Field> snaps;
  for (const auto& s : manifest.at("snapshots"))
    if (s.at("frame").get<bool>()) snaps.push_back(read_field_csv(dir / s.at("file").get<std::string>(), grid,
                                                                  s.at("t").get<double>()));
  if (snaps.size() < 3)
    throw Error(ErrorKind::InsufficientData, "the run in " + dir.string() + " holds fewer than three frames");

  const GridPtr y_grid = build_y_grid(spec, cfg.selfsim.y_max, cfg.selfsim.m_y);
  const auto frames = build_frames(snaps, spec, a, T, y_grid);
  std::vector<CutoffSpec> cutoffs;
  for (double R : cfg.selfsim.cutoff_R) cutoffs.push_back({0.0, R});
  const EnergyReport rep = build_energy_report(frames, spec, cutoffs);
  write_text(dir / "energy.csv", energy_report_csv(rep));
  {
    std::ostringstream loc;
    loc << "s,R,E_psi,script_E_psi,bridge_residual\n";
    for (const auto& row : rep.rows)
      for (std::size_t c = 0; c < cutoffs.size(); ++c)
        loc << fmt("%.12g", row.s) << "," << fmt("%.12g", cutoffs[c].R) << "," << fmt("%.12g", row.local[c].E_psi)
            << "," << fmt("%.12g", row.local[c].script_E_psi) << "," << fmt("%.3g", row.local[c].bridge_residual)
            << "\n";
    write_text(dir / "energy_local.csv", loc.str());
  }

  std::vector<RescaledPotential> vbar;
  for (const auto& f : frames) vbar.push_back(rescaled_potential(f, spec));
  for (int k : cfg.selfsim.k_list) {
    if (k == 0) continue;
    IdentityOptions io;
    io.k = k;
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < frames.size(); ++j)
      worst = std::max(worst, identity_residual(std::span(frames).subspan(j - 1, 3),
                                                std::span<const RescaledPotential>(vbar).subspan(j - 1, 3),
                                                IdentityId::WVar, io));
    out << "max wvar residual, k = " << k << ": " << fmt("%.3g", worst) << "\n";
  }

  const auto dev = limit_convergence_check(frames, a, spec);
  const bool dev_ok = dev.back().deviation <= 0.1 * rep.k_a;
  const bool trend_ok = limit_trend_ok(dev);
  out << "frames = " << frames.size() << ", s in [" << fmt("%.4f", frames.front().s) << ", "
      << fmt("%.4f", frames.back().s) << "]\n";
  out << "E(s0) = " << fmt("%.8g", rep.rows.front().E) << ", E(s_end) = " << fmt("%.8g", rep.rows.back().E) << "\n";
  if (rep.pohozaev_applicable) out << "fitted Pohozaev c2 = " << fmt("%.6g", rep.pohozaev_c2) << "\n";
  out << "core deviation |w - k(a)| at s_end = " << fmt("%.5g", dev.back().deviation) << " (k(a) = "
      << fmt("%.6g", rep.k_a) << ")" << (dev_ok ? " pass" : " FAIL") << "\n";
  out << "core deviation trend: " << (trend_ok ? "pass" : "FAIL") << "\n";
  bool ok = dev_ok && trend_ok;
  if (spec.potential.kind == FunctionKind::Constant) {
    const double defect = monotonicity_check_constV(rep, spec);
    const bool mono_ok = defect <= 1e-3 * std::abs(rep.rows.front().E);
    out << "energy monotonicity defect = " << fmt("%.3g", defect) << (mono_ok ? " pass" : " FAIL") << "\n";
    ok = ok && mono_ok;
  }
  out << "output: " << (dir / "energy.csv").string() << "\n";
  return ok ? 0 : 1;
}

// Rewrites whatever results exist in the output directory as whitespace
// separated tables for gnuplot.
int cmd_report(const Config& cfg, const Options& opt, std::ostream& out, std::ostream&) {
  const fs::path dir = output_dir(cfg, opt);
  const double beta = cfg.problem.beta();
  bool found = false;
  std::optional<BlowupRecord> rec;
  if (fs::exists(dir / "blowup_record.json")) {
    rec = blowup_record_from_json(read_text(dir / "blowup_record.json"));
    found = true;
    out << "single run: T_est = " << fmt("%.12g", rec->T_est) << " +- " << fmt("%.3g", rec->T_ci)
        << ", a = " << fmt("%.6g", rec->a) << ", rate exponent = " << fmt("%.5f", rec->rate_exponent)
        << ", type-I sup = " << fmt("%.5f", rec->typeI_sup) << "\n";
  }
  auto csv_rows = [&](const fs::path& p) {
    std::vector<std::vector<double>> rows;
    std::istringstream in(read_text(p));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  if (fs::exists(dir / "trajectory.csv")) {
    found = true;
    std::ostringstream dat;
    dat << "# t u_max argmax" << (rec ? " T-t (T-t)^beta*u_max" : "") << "\n";
    for (const auto& r : csv_rows(dir / "trajectory.csv")) {
      dat << fmt("%.17g", r[0]) << " " << fmt("%.17g", r[1]) << " " << fmt("%.17g", r[2]);
      if (rec && r[0] < rec->T_est) {
        const double tau = rec->T_est - r[0];
        dat << " " << fmt("%.17g", tau) << " " << fmt("%.17g", std::pow(tau, beta) * r[1]);
      }
      dat << "\n";
    }
    write_text(dir / "trajectory.dat", dat.str());
  }
  if (fs::exists(dir / "sweep.csv")) {
    found = true;
    const auto rows = csv_rows(dir / "sweep.csv");
    const double target = compute_A(cfg.problem, 100000).A / (cfg.problem.p - 1.0);
    std::ostringstream dat;
    dat << "# M T_est T_ci TMp1 relative_deviation a phiV_at_a rate_exponent\n";
    out << "sweep: " << rows.size() << " rows, target A/(p-1) = " << fmt("%.8g", target) << "\n";
    for (const auto& r : rows) {
      const double dev = (r[3] - target) / target;
      dat << fmt("%.17g", r[0]) << " " << fmt("%.17g", r[1]) << " " << fmt("%.17g", r[2]) << " "
          << fmt("%.17g", r[3]) << " " << fmt("%.17g", dev) << " " << fmt("%.17g", r[4]) << " "
          << fmt("%.17g", r[5]) << " " << fmt("%.17g", r[6]) << "\n";
      out << "  M = " << fmt("%-8g", r[0]) << " T M^{p-1} = " << fmt("%.6f", r[3])
          << "  relative deviation = " << fmt("%+.4f", dev) << "\n";
    }
    write_text(dir / "sweep.dat", dat.str());
  }
  if (fs::exists(dir / "energy.csv")) {
    found = true;
    const auto rows = csv_rows(dir / "energy.csv");
    std::ostringstream dat;
    dat << "# s E E2 E4 E6 tildeE2 res_var res_wvar1 res_dissipation res_pohozaev dev_core\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) dat << (i ? " " : "") << fmt("%.12g", r[i]);
      dat << "\n";
    }
    write_text(dir / "energy.dat", dat.str());
    if (!rows.empty())
      out << "energy: " << rows.size() << " frames, E from " << fmt("%.8g", rows.front()[1]) << " to "
          << fmt("%.8g", rows.back()[1]) << ", final core deviation " << fmt("%.4g", rows.back()[10]) << "\n";
  }
  if (!found) {
    out << "no results found in " << dir.string() << "\n";
    return 1;
  }
  out << "gnuplot tables written to " << dir.string() << "\n";
  return 0;
}

int cmd_selftest(std::ostream& out) {
  bool ok = true;
  for (const auto& c : run_selftest()) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << "  error " << fmt("%.3g", c.error) << " (tolerance "
        << fmt("%.0e", c.tolerance) << ")\n";
    ok = ok && c.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blow-up experiments for u_t = Δu + V(x)|u|^{p-1}u with Dirichlet data", "blowup-lab"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", opt.config_path, "configuration file");
    if (need_config) c->required();
    sub->add_option("--out", opt.out_dir, "output directory (overrides config and BLOWUP_LAB_OUT)");
    sub->add_option("--workers", opt.workers, "sweep worker threads")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "one trajectory to blow-up; writes the series, snapshots and record");
  auto* sweep = app.add_subcommand("sweep", "amplitude sweep with the asymptotic checks");
  auto* energy = app.add_subcommand("energy", "self-similar energies from a previous run's snapshots");
  auto* report = app.add_subcommand("report", "summary and gnuplot tables of existing results");
  auto* selftest = app.add_subcommand("selftest", "closed-form oracle suite");
  for (auto* s : {run, sweep, energy, report}) add_common(s, true);
  add_common(selftest, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (selftest->parsed()) return cmd_selftest(out);
    const Config cfg = load_config(opt.config_path);
    if (run->parsed()) return cmd_run(cfg, opt, out, err);
    if (sweep->parsed()) return cmd_sweep(cfg, opt, out, err);
    if (energy->parsed()) return cmd_energy(cfg, opt, out, err);
    if (report->parsed()) return cmd_report(cfg, opt, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::ConfigError:
      case ErrorKind::InvalidProblem:
      case ErrorKind::InvalidArgument:
        return 2;
      default:
        return 1;
    }
  } catch (const json::exception& e) {
    err << "error: malformed result file: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace blowup_lab
