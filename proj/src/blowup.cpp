#include "blowup_lab/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "blowup_lab/errors.hpp"
#include "json.hpp"

namespace blowup_lab {

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;  // value at x_mean
  double x_mean = 0.0;
  double max_residual = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  LineFit fit;
  double y_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fit.x_mean += x[i];
    y_mean += y[i];
  }
  fit.x_mean /= static_cast<double>(n);
  y_mean /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - fit.x_mean;
    sxx += dx * dx;
    sxy += dx * (y[i] - y_mean);
  }
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = y_mean;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * (x[i] - fit.x_mean));
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  return fit;
}

constexpr std::size_t kMinTailPoints = 30;

struct DecadeFit {
  double T = 0.0;
  double envelope = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  std::size_t points = 0;
};

// Fits u^{1-p} against t over entries with u in [u_lo, u_hi].
DecadeFit fit_decade(std::span<const SeriesEntry> series, double p, double u_lo, double u_hi) {
  std::vector<double> t, y;
  for (const auto& e : series) {
    if (e.u_max >= u_lo && e.u_max <= u_hi) {
      t.push_back(e.t);
      y.push_back(std::pow(e.u_max, 1.0 - p));
    }
  }
  if (t.size() < kMinTailPoints)
    throw Error(ErrorKind::InsufficientData,
                "only " + std::to_string(t.size()) + " series entries in the fit decade");
  // Fit in y scaled to O(1) so the residual envelope is meaningful.
  const double scale = y.front() != 0.0 ? 1.0 / std::abs(y.front()) : 1.0;
  for (double& v : y) v *= scale;
  const LineFit fit = fit_line(t, y);
  if (!(fit.slope < 0.0))
    throw Error(ErrorKind::NotBlowingUp, "u_max^{1-p} does not decrease over the final decade");
  DecadeFit out;
  out.T = fit.x_mean - fit.intercept / fit.slope;
  out.envelope = fit.max_residual / std::abs(fit.slope);
  out.t_lo = t.front();
  out.t_hi = t.back();
  out.points = t.size();
  return out;
}

double u_final(std::span<const SeriesEntry> series) {
  if (series.empty()) throw Error(ErrorKind::InsufficientData, "empty series");
  return series.back().u_max;
}

}  // namespace

TimeEstimate estimate_T(std::span<const SeriesEntry> series, double p) {
  const double top = u_final(series);
  const DecadeFit last = fit_decade(series, p, top / 10.0, top);
  TimeEstimate est;
  est.T = last.T;
  est.ci = last.envelope;
  est.t_lo = last.t_lo;
  est.t_hi = last.t_hi;
  est.points = last.points;
  try {
    const DecadeFit prev = fit_decade(series, p, top / 100.0, top / 10.0);
    est.ci = std::max(est.ci, std::abs(prev.T - last.T));
  } catch (const Error&) {
    // fewer than two decades of data: the residual envelope stands alone
  }
  return est;
}

TimeEstimate estimate_T(const Trajectory& traj) {
  if (traj.stop_reason != StopReason::Threshold)
    throw Error(ErrorKind::NotBlowingUp, "trajectory stopped by " + to_string(traj.stop_reason));
  return estimate_T(traj.series, traj.spec.p);
}

BlowupPoint locate_blowup_point(const Trajectory& traj) {
  if (traj.snapshots.empty()) throw Error(ErrorKind::InsufficientData, "trajectory has no snapshots");
  const Field& last = traj.snapshots.back();
  std::size_t idx = 0;
  for (std::size_t i = 1; i < last.size(); ++i)
    if (last.values[i] > last.values[idx]) idx = i;
  BlowupPoint bp;
  bp.a = last.grid->node(idx);
  const double top = u_final(traj.series);
  for (const auto& e : traj.series)
    if (e.u_max >= top / 10.0) bp.drift = std::max(bp.drift, std::abs(e.argmax - bp.a));
  const double h = last.grid->spacing();
  bp.settled = bp.drift <= 2.0 * h + 1e-12 * h;
  if (bp.drift > 10.0 * h)
    throw Error(ErrorKind::AmbiguousLocation,
                "argmax drifted by " + std::to_string(bp.drift / h) + " grid spacings");
  return bp;
}

double fit_rate_exponent(std::span<const SeriesEntry> series, double T, double u_lo, double u_hi) {
  std::vector<double> x, y;
  for (const auto& e : series) {
    if (e.u_max >= u_lo && e.u_max <= u_hi && e.t < T) {
      x.push_back(-std::log(T - e.t));
      y.push_back(std::log(e.u_max));
    }
  }
  if (x.size() < 3) throw Error(ErrorKind::InsufficientData, "rate-fit window holds fewer than 3 entries");
  return fit_line(x, y).slope;
}

double fit_rate_exponent(const Trajectory& traj, double T) {
  if (!(T > traj.series.back().t))
    throw Error(ErrorKind::InvalidTime, "T must exceed the last series time");
  return fit_rate_exponent(traj.series, T, traj.u_stop / 1e3, traj.u_stop / 10.0);
}

double typeI_statistic(std::span<const SeriesEntry> series, double T, double beta) {
  double best = 0.0;
  for (const auto& e : series)
    if (e.t < T) best = std::max(best, std::pow(T - e.t, beta) * e.u_max);
  return best;
}

double typeI_statistic(const Trajectory& traj, double T) {
  return typeI_statistic(traj.series, T, traj.spec.beta());
}

double typeI_plateau_ratio(const Trajectory& traj, double T) {
  const double beta = traj.spec.beta();
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& e : traj.series) {
    if (e.t < T && e.u_max >= traj.u_stop / 1e3 && e.u_max <= traj.u_stop / 10.0) {
      const double v = std::pow(T - e.t, beta) * e.u_max;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > 0.0)) throw Error(ErrorKind::InsufficientData, "rate-fit window is empty");
  return hi / lo;
}

std::vector<double> blowup_set_proxy(const Trajectory& traj, double T, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "threshold must lie in (0, 1]");
  const Field& last = traj.snapshots.back();
  if (!(T > last.time)) throw Error(ErrorKind::InvalidTime, "T must exceed the final snapshot time");
  const double scale = std::pow(T - last.time, traj.spec.beta());
  double top = 0.0;
  for (double v : last.values) top = std::max(top, scale * v);
  std::vector<double> points;
  for (std::size_t i = 0; i < last.size(); ++i)
    if (scale * last.values[i] >= threshold * top) points.push_back(last.grid->node(i));
  return points;
}

ConcentrationSample ball_concentration_sample(const Field& u, const ProblemSpec& spec, double center,
                                              double delta, double V_floor) {
  const Grid& g = *u.grid;
  if (!(delta > 0.0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be positive");
  double volume = 0.0;
  if (g.kind() == GridKind::Radial) {
    if (std::abs(center) > 1e-12 || delta > g.extent() * (1.0 + 1e-12))
      throw Error(ErrorKind::InvalidArgument, "ball must be centred at 0 and lie inside the radial domain");
    volume = unit_sphere_area(g.dimension()) * std::pow(delta, g.dimension()) / g.dimension();
  } else {
    if (center - delta < -g.extent() * (1.0 + 1e-12) || center + delta > g.extent() * (1.0 + 1e-12))
      throw Error(ErrorKind::InvalidArgument, "ball leaves the interval");
    volume = 2.0 * delta;
  }

  // Trapezoid over the nodes inside the ball.
  const double slack = 1e-12 * g.spacing();
  std::size_t first = g.size(), last = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (std::abs(g.node(i) - center) <= delta + slack) {
      first = std::min(first, i);
      last = i;
    }
  }
  if (first >= last) throw Error(ErrorKind::InvalidArgument, "ball contains fewer than two nodes");
  const double area = g.kind() == GridKind::Radial ? unit_sphere_area(g.dimension()) : 1.0;
  auto weight = [&](std::size_t i) {
    double w = g.spacing();
    if (g.kind() == GridKind::Radial) w *= area * std::pow(g.node(i), g.dimension() - 1);
    if (i == first || i == last) w *= 0.5;
    return w;
  };

  const Field lap = laplacian(u);
  const Field grad2 = gradient_sq(u);
  const double p = spec.p;
  double l2 = 0.0, grad = 0.0, power = 0.0, flux = 0.0;
  for (std::size_t i = first; i <= last; ++i) {
    const double w = weight(i);
    const double v = u.values[i];
    const double a = std::abs(v);
    const double up = std::pow(a, p - 1.0) * v;
    l2 += w * v * v;
    grad += w * grad2.values[i];
    power += w * std::pow(a, p + 1.0);
    flux += w * v * (lap.values[i] + spec.potential(g.node(i)) * up);
  }
  ConcentrationSample s;
  s.t = u.time;
  s.Phi = 0.5 * l2;
  s.I = 0.5 * grad - V_floor / (p + 1.0) * power;
  s.dPhi = flux;
  const double c_tilde = (p - 1.0) / (p + 1.0) * V_floor * std::pow(volume, 0.5 * (1.0 - p)) *
                         std::pow(2.0, 0.5 * (1.0 - p));
  s.defect = s.dPhi - (p + 1.0) / (p - 1.0) * c_tilde * std::pow(s.Phi, 0.5 * (1.0 + p));
  return s;
}

std::vector<ConcentrationSample> ball_concentration_diagnostic(const Trajectory& traj, double center,
                                                               double delta, double V_floor) {
  std::vector<ConcentrationSample> out;
  out.reserve(traj.snapshots.size());
  for (const Field& u : traj.snapshots)
    out.push_back(ball_concentration_sample(u, traj.spec, center, delta, V_floor));
  return out;
}

BlowupRecord analyze(const Trajectory& traj) {
  const TimeEstimate est = estimate_T(traj);
  BlowupRecord rec;
  rec.T_est = est.T;
  rec.T_ci = est.ci;
  rec.t_lo = est.t_lo;
  rec.t_hi = est.t_hi;
  try {
    const BlowupPoint bp = locate_blowup_point(traj);
    rec.a = bp.a;
    rec.location_settled = bp.settled;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::AmbiguousLocation) throw;
    rec.a = traj.series.back().argmax;
    rec.location_settled = false;
  }
  rec.rate_exponent = fit_rate_exponent(traj, est.T);
  rec.typeI_sup = typeI_statistic(traj, est.T);
  rec.blowup_set = blowup_set_proxy(traj, est.T);
  return rec;
}

std::string to_json(const BlowupRecord& rec) {
  nlohmann::ordered_json j;
  j["T_est"] = rec.T_est;
  j["T_ci"] = rec.T_ci;
  j["a"] = rec.a;
  j["rate_exponent"] = rec.rate_exponent;
  j["typeI_sup"] = rec.typeI_sup;
  j["fit_window"] = {rec.t_lo, rec.t_hi};
  j["blowup_set_proxy"] = rec.blowup_set;
  j["location_settled"] = rec.location_settled;
  return j.dump(2);
}

BlowupRecord blowup_record_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  BlowupRecord rec;
  rec.T_est = j.at("T_est").get<double>();
  rec.T_ci = j.at("T_ci").get<double>();
  rec.a = j.at("a").get<double>();
  rec.rate_exponent = j.at("rate_exponent").get<double>();
  rec.typeI_sup = j.at("typeI_sup").get<double>();
  rec.t_lo = j.at("fit_window").at(0).get<double>();
  rec.t_hi = j.at("fit_window").at(1).get<double>();
  if (j.contains("blowup_set_proxy")) rec.blowup_set = j["blowup_set_proxy"].get<std::vector<double>>();
  rec.location_settled = j.value("location_settled", true);
  return rec;
}

}  // namespace blowup_lab
