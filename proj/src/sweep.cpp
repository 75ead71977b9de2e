#include "blowup_lab/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <thread>

#include "blowup_lab/errors.hpp"
#include "json.hpp"

namespace blowup_lab {

namespace {

struct Outcome {
  std::optional<SweepRow> row;
  std::string note;
  std::exception_ptr error;
};

Outcome run_one(const ProblemSpec& spec, const GridPtr& grid, const SolverParams& params, double M) {
  Outcome out;
  try {
    const Trajectory traj = run_to_blowup(spec, M, grid, params);
    if (traj.stop_reason != StopReason::Threshold) {
      out.note = "M = " + std::to_string(M) + ": stopped by " + to_string(traj.stop_reason) + ", no row";
      return out;
    }
    const BlowupRecord rec = analyze(traj);
    SweepRow row;
    row.M = M;
    row.T_est = rec.T_est;
    row.T_ci = rec.T_ci;
    row.TMp1 = rec.T_est * std::pow(M, spec.p - 1.0);
    row.a = rec.a;
    row.phiV_at_a = std::pow(std::max(spec.profile(rec.a), 0.0), spec.p - 1.0) * spec.potential(rec.a);
    row.rate_exponent = rec.rate_exponent;
    row.location_flagged = !rec.location_settled;
    out.row = row;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::LikelyGlobalSolution && e.kind() != ErrorKind::NotBlowingUp) {
      out.error = std::current_exception();
      return out;
    }
    out.note = "M = " + std::to_string(M) + ": " + e.what();
  } catch (...) {
    out.error = std::current_exception();
  }
  return out;
}

}  // namespace

SweepReport run_sweep(const ProblemSpec& spec, const GridPtr& grid, const SolverParams& params,
                      const std::vector<double>& Ms, int workers) {
  if (Ms.empty()) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one M");
  for (std::size_t i = 0; i < Ms.size(); ++i) {
    if (!(Ms[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "sweep amplitudes must be positive");
    if (i > 0 && !(Ms[i] > Ms[i - 1])) throw Error(ErrorKind::InvalidArgument, "sweep amplitudes must ascend");
  }
  if (workers < 1) throw Error(ErrorKind::InvalidArgument, "sweep needs at least one worker");
  params.validate();
  const ValidationReport vr = validate_spec(spec, *grid);

  SweepReport rep;
  rep.p = spec.p;
  rep.subcritical = vr.theorem3_applicable;
  const AResult a16 = compute_A(spec, *grid);
  const AResult a64 = compute_A(spec, 64 * grid->intervals());
  rep.A = a16.A;
  rep.target = rep.A / (spec.p - 1.0);
  rep.maximizer = a16.maximizer;
  rep.scan_slack = std::abs(a64.max_value - a16.max_value) + 1e-12 * a16.max_value;
  rep.h = grid->spacing();

  std::vector<Outcome> outcomes(Ms.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < Ms.size(); i = next++) outcomes[i] = run_one(spec, grid, params, Ms[i]);
  };
  const int n_threads = std::min<int>(workers, static_cast<int>(Ms.size()));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_threads; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  for (auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
    if (o.row) rep.rows.push_back(*o.row);
    if (!o.note.empty()) rep.notes.push_back(o.note);
  }
  std::sort(rep.rows.begin(), rep.rows.end(), [](const SweepRow& x, const SweepRow& y) { return x.M < y.M; });
  if (rep.rows.empty()) throw Error(ErrorKind::EmptySweep, "no amplitude in the sweep blew up");
  return rep;
}

Theorem2Check check_theorem2(const SweepReport& report, double tolerance) {
  const auto& rows = report.rows;
  if (rows.size() < 3) throw Error(ErrorKind::InsufficientData, "theorem-2 check needs at least three rows");
  Theorem2Check c;
  for (const auto& r : rows) c.margins.push_back(r.TMp1 - report.target);
  const std::size_t n = rows.size();
  c.relative_deviation = std::abs(c.margins.back()) / report.target;
  c.within_tolerance = c.relative_deviation <= tolerance;
  c.trend = true;
  for (std::size_t j = n - 2; j < n; ++j) {
    const double noise = rows[j - 1].T_ci * std::pow(rows[j - 1].M, report.p - 1.0) +
                         rows[j].T_ci * std::pow(rows[j].M, report.p - 1.0);
    if (std::abs(c.margins[j]) > std::abs(c.margins[j - 1]) + noise) c.trend = false;
  }
  return c;
}

Theorem3Check check_theorem3(const SweepReport& report) {
  if (!report.subcritical)
    throw Error(ErrorKind::Theorem3Inapplicable, "p is not subcritical; the concentration bound does not apply");
  const auto& rows = report.rows;
  if (rows.size() < 3) throw Error(ErrorKind::InsufficientData, "theorem-3 check needs at least three rows");
  Theorem3Check c;
  c.expected_exponent = (report.p - 1.0) / 4.0;
  c.nonnegative = true;
  c.T_positive = true;
  std::vector<double> lx, ly;
  for (const auto& r : rows) {
    const double m = 1.0 / report.A - r.phiV_at_a;
    c.margins.push_back(m);
    if (m < -report.scan_slack) c.nonnegative = false;
    if (!(r.T_est > 0.0)) c.T_positive = false;
    if (m > 0.0) {
      lx.push_back(std::log(r.M));
      ly.push_back(std::log(m));
    }
  }
  c.shrinking = c.margins.back() < c.margins.front();
  c.location = std::abs(rows.back().a - report.maximizer) <= 5.0 * report.h * (1.0 + 1e-12);
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double den = n * sxx - sx * sx;
    if (den > 0.0) c.fitted_decay_exponent = -(n * sxy - sx * sy) / den;
  }
  return c;
}

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "M,T_est,T_ci,TMp1,a,phiV_at_a,rate_exponent\n";
  char buf[256];
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.M, r.T_est, r.T_ci, r.TMp1,
                  r.a, r.phiV_at_a, r.rate_exponent);
    out << buf;
  }
  return out.str();
}

std::string sweep_summary_json(const SweepReport& report, const Theorem2Check& t2,
                               const std::optional<Theorem3Check>& t3) {
  nlohmann::ordered_json j;
  j["A"] = report.A;
  j["target"] = report.target;
  j["margins2"] = t2.margins;
  j["margins3"] = t3 ? nlohmann::json(t3->margins) : nlohmann::json::array();
  if (t3 && t3->fitted_decay_exponent)
    j["fitted_decay_exponent"] = *t3->fitted_decay_exponent;
  else
    j["fitted_decay_exponent"] = nullptr;
  nlohmann::ordered_json checks;
  checks["theorem2_tolerance"] = t2.within_tolerance;
  checks["theorem2_trend"] = t2.trend;
  if (t3) {
    checks["theorem3_nonnegative"] = t3->nonnegative;
    checks["theorem3_shrinking"] = t3->shrinking;
    checks["theorem3_location"] = t3->location;
    checks["theorem3_T_positive"] = t3->T_positive;
  }
  j["checks"] = checks;
  return j.dump(2);
}

}  // namespace blowup_lab
