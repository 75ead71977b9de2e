#include "blowup_lab/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "blowup_lab/errors.hpp"

namespace blowup_lab {

void SolverParams::validate() const {
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "cfl_safety must lie in (0, 1]");
  if (!(reaction_safety > 0.0 && reaction_safety <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "reaction_safety must lie in (0, 1]");
  if (!(u_stop >= 1e4)) throw Error(ErrorKind::InvalidArgument, "u_stop must be >= 1e4");
  if (max_steps <= 0) throw Error(ErrorKind::InvalidArgument, "max_steps must be positive");
  if (!(series_resolution > 0.0)) throw Error(ErrorKind::InvalidArgument, "series_resolution must be positive");
}

std::string to_string(StopReason r) {
  switch (r) {
    case StopReason::Threshold: return "threshold";
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::Nan: return "nan";
  }
  return "nan";
}

namespace {

// Holds the per-grid constants and scratch buffers of the explicit scheme so
// the inner loop does not allocate.
class Stepper {
 public:
  Stepper(const ProblemSpec& spec, const GridPtr& grid, const Terms& terms)
      : grid_(grid), stencil_(*grid), p_(spec.p), terms_(terms) {
    const std::size_t n = grid->size();
    v_.resize(n);
    for (std::size_t i = 0; i < n; ++i) v_[i] = spec.potential(grid->node(i));
    first_ = grid->kind() == GridKind::Interval ? 1 : 0;
    last_ = n - 1;  // exclusive: node n-1 is the Dirichlet boundary
    k_.resize(n);
    mid_.resize(n);
    lap_.resize(n);
    const double h = grid->spacing();
    inv_h2_ = 1.0 / (h * h);
    diffusion_dt_ = h * h / (2.0 * stencil_.dimension_factor());
    if (grid->kind() == GridKind::Radial) {
      const int N = grid->dimension();
      center_coeff_ = 2.0 * N * inv_h2_;
      lower_.assign(n, 0.0);
      upper_.assign(n, 0.0);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double drift = (N - 1) / (2.0 * h * grid->node(i));
        lower_[i] = inv_h2_ - drift;
        upper_[i] = inv_h2_ + drift;
      }
    }
    if (p_ == 2.0) power_ = Power::Two;
    else if (p_ == 3.0) power_ = Power::Three;
    else power_ = Power::General;
  }

  // Largest V |u|^{p-1}, the local reaction rate.
  double reaction_rate(std::span<const double> u) const {
    double r = 0.0;
    for (std::size_t i = first_; i < last_; ++i) r = std::max(r, v_[i] * grow(std::abs(u[i])));
    return r;
  }

  // `tail_growth` > 0 additionally caps the relative growth per step.
  double choose_dt(std::span<const double> u, const SolverParams& params,
                   double tail_growth = 0.0) const {
    double dt = std::numeric_limits<double>::infinity();
    if (terms_.diffusion) dt = params.cfl_safety * diffusion_dt_;
    if (terms_.reaction) {
      const double rate = reaction_rate(u);
      if (!std::isfinite(rate)) throw Error(ErrorKind::NanState, "u_max is not finite");
      if (rate > 0.0) {
        dt = std::min(dt, params.reaction_safety / (p_ * rate));
        if (tail_growth > 0.0) dt = std::min(dt, tail_growth / rate);
      }
    }
    if (!std::isfinite(dt))
      throw Error(ErrorKind::InvalidArgument, "no active term bounds the time step");
    return dt;
  }

  void step(std::vector<double>& u, double dt) {
    rhs(u, k_);
    for (std::size_t i = 0; i < u.size(); ++i) mid_[i] = u[i] + 0.5 * dt * k_[i];
    rhs(mid_, k_);
    bool finite = true;
    for (std::size_t i = first_; i < last_; ++i) {
      u[i] += dt * k_[i];
      finite &= std::isfinite(u[i]);
    }
    u[last_] = 0.0;
    if (first_ == 1) u[0] = 0.0;
    if (!finite) throw Error(ErrorKind::NanState, "non-finite value after step");
  }

 private:
  enum class Power { Two, Three, General };

  double grow(double a) const {
    switch (power_) {
      case Power::Two: return a;
      case Power::Three: return a * a;
      case Power::General: return std::pow(a, p_ - 1.0);
    }
    return 0.0;
  }

  template <class Reaction>
  void rhs_kernel(const double* u, double* out, Reaction&& react) const {
    const double* v = v_.data();
    if (!terms_.reaction) {
      stencil_.apply(std::span<const double>(u, v_.size()), std::span<double>(out, v_.size()));
      return;
    }
    if (!terms_.diffusion) {
      for (std::size_t i = first_; i < last_; ++i) out[i] = v[i] * react(u[i]);
      return;
    }
    if (grid_->kind() == GridKind::Interval) {
      for (std::size_t i = first_; i < last_; ++i)
        out[i] = ((u[i - 1] + u[i + 1]) - 2.0 * u[i]) * inv_h2_ + v[i] * react(u[i]);
    } else {
      const double* lo = lower_.data();
      const double* up = upper_.data();
      const double diag = -2.0 * inv_h2_;
      out[0] = center_coeff_ * (u[1] - u[0]) + v[0] * react(u[0]);
      for (std::size_t i = 1; i < last_; ++i)
        out[i] = lo[i] * u[i - 1] + diag * u[i] + up[i] * u[i + 1] + v[i] * react(u[i]);
    }
  }

  void rhs(std::span<const double> u, std::vector<double>& out) {
    switch (power_) {
      case Power::Two:
        rhs_kernel(u.data(), out.data(), [](double a) { return std::abs(a) * a; });
        break;
      case Power::Three:
        rhs_kernel(u.data(), out.data(), [](double a) { return a * a * a; });
        break;
      case Power::General: {
        const double q = p_ - 1.0;
        rhs_kernel(u.data(), out.data(), [q](double a) { return std::pow(std::abs(a), q) * a; });
        break;
      }
    }
    out[last_] = 0.0;
    if (first_ == 1) out[0] = 0.0;
  }

  GridPtr grid_;
  LaplacianStencil stencil_;
  double p_;
  Terms terms_;
  Power power_ = Power::General;
  std::vector<double> v_;
  std::vector<double> k_, mid_, lap_;
  std::vector<double> lower_, upper_;
  double inv_h2_ = 0.0;
  double center_coeff_ = 0.0;
  std::size_t first_ = 0, last_ = 0;
  double diffusion_dt_ = 0.0;
};

void check_field(const ProblemSpec& spec, const Field& u) {
  if (!u.grid) throw Error(ErrorKind::InvalidArgument, "field has no grid");
  if (u.grid->kind() != spec.grid_kind())
    throw Error(ErrorKind::InvalidArgument, "field grid does not match the problem domain");
  for (double x : u.values)
    if (!std::isfinite(x)) throw Error(ErrorKind::NanState, "field contains non-finite values");
}

std::pair<double, double> max_and_argmax(const Field& u) {
  double best = -std::numeric_limits<double>::infinity();
  std::size_t idx = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u.values[i] > best) {
      best = u.values[i];
      idx = i;
    }
  }
  return {best, u.grid->node(idx)};
}

// Compensated running sum for the model time.
struct Clock {
  double t = 0.0;
  double carry = 0.0;
  void advance(double dt) {
    const double y = dt - carry;
    const double next = t + y;
    carry = (next - t) - y;
    t = next;
  }
  void set(double value) {
    t = value;
    carry = 0.0;
  }
};

}  // namespace

double choose_dt(const Field& u, const ProblemSpec& spec, const SolverParams& params) {
  check_field(spec, u);
  return Stepper(spec, u.grid, params.terms).choose_dt(u.values, params);
}

Field step_once(const Field& u, double dt, const ProblemSpec& spec, const Terms& terms) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  check_field(spec, u);
  Stepper stepper(spec, u.grid, terms);
  Field out = u;
  stepper.step(out.values, dt);
  out.time = u.time + dt;
  return out;
}

Trajectory integrate(const ProblemSpec& spec, Field u0, const SolverParams& params) {
  params.validate();
  check_field(spec, u0);
  Stepper stepper(spec, u0.grid, params.terms);

  Trajectory traj;
  traj.spec = spec;
  traj.u_stop = params.u_stop;
  traj.grid = u0.grid;

  std::vector<double> targets = params.snapshot_times;
  std::sort(targets.begin(), targets.end());
  std::size_t next_target = 0;
  while (next_target < targets.size() && targets[next_target] <= u0.time) ++next_target;

  Field u = std::move(u0);
  u.values.back() = 0.0;
  if (u.grid->kind() == GridKind::Interval) u.values.front() = 0.0;
  Clock clock;
  clock.set(u.time);

  auto [u_max, arg] = max_and_argmax(u);
  traj.series.push_back({clock.t, u_max, arg});
  traj.snapshots.push_back(u);
  double last_snapshot_max = u_max;
  double last_series_max = u_max;
  long long last_series_step = 0;

  // Keeps at least 30 series entries per decade of growth near the end.
  const double tail_growth = std::log(10.0) / 30.0;

  traj.stop_reason = StopReason::MaxSteps;
  if (u_max >= params.u_stop) traj.stop_reason = StopReason::Threshold;
  while (traj.stop_reason != StopReason::Threshold && traj.steps < params.max_steps) {
    double dt = 0.0;
    bool hit_target = false;
    try {
      dt = stepper.choose_dt(u.values, params, tail_growth);
      if (next_target < targets.size() && clock.t + dt >= targets[next_target]) {
        dt = targets[next_target] - clock.t;
        hit_target = true;
      }
      stepper.step(u.values, dt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NanState) throw;
      traj.stop_reason = StopReason::Nan;
      break;
    }
    ++traj.steps;
    if (hit_target) {
      clock.set(targets[next_target]);
      ++next_target;
    } else {
      clock.advance(dt);
    }
    u.time = clock.t;

    std::tie(u_max, arg) = max_and_argmax(u);
    const bool done = u_max >= params.u_stop;
    const bool doubled = u_max >= 2.0 * last_snapshot_max;
    const bool moved = std::abs(u_max - last_series_max) >= params.series_resolution * last_series_max;
    if (done || doubled || hit_target || moved || traj.steps - last_series_step >= 1000) {
      traj.series.push_back({clock.t, u_max, arg});
      last_series_max = u_max;
      last_series_step = traj.steps;
    }
    if (done || doubled || hit_target) {
      traj.snapshots.push_back(u);
      if (doubled) last_snapshot_max = u_max;
    }
    if (done) traj.stop_reason = StopReason::Threshold;
  }
  if (traj.stop_reason != StopReason::Threshold && traj.series.back().t < clock.t &&
      std::isfinite(u_max)) {
    traj.series.push_back({clock.t, u_max, arg});
    traj.snapshots.push_back(u);
  }
  return traj;
}

Field integrate_until(const ProblemSpec& spec, Field u0, const SolverParams& params, double t_end) {
  params.validate();
  check_field(spec, u0);
  if (!(t_end >= u0.time)) throw Error(ErrorKind::InvalidTime, "t_end precedes the initial time");
  Stepper stepper(spec, u0.grid, params.terms);
  Field u = std::move(u0);
  Clock clock;
  clock.set(u.time);
  long long steps = 0;
  while (clock.t < t_end) {
    if (steps++ >= params.max_steps)
      throw Error(ErrorKind::InsufficientData, "max_steps reached before t_end");
    double dt = stepper.choose_dt(u.values, params);
    const bool last = clock.t + dt >= t_end;
    if (last) dt = t_end - clock.t;
    stepper.step(u.values, dt);
    if (last) clock.set(t_end);
    else clock.advance(dt);
  }
  u.time = clock.t;
  return u;
}

Trajectory run_to_blowup(const ProblemSpec& spec, double M, const GridPtr& grid,
                         const SolverParams& params) {
  if (!(M > 0.0)) throw Error(ErrorKind::InvalidArgument, "amplitude M must be positive");
  validate_spec(spec, *grid);
  Field u0 = sample(grid, [&](double x) { return M * spec.profile(x); });
  u0.values.back() = 0.0;
  if (grid->kind() == GridKind::Interval) u0.values.front() = 0.0;
  const double initial_max = *std::max_element(u0.values.begin(), u0.values.end());

  Trajectory traj = integrate(spec, std::move(u0), params);
  traj.M = M;
  if (traj.stop_reason == StopReason::MaxSteps && traj.series.back().u_max < 10.0 * initial_max)
    throw Error(ErrorKind::LikelyGlobalSolution,
                "no blow-up within max_steps (u_max = " + std::to_string(traj.series.back().u_max) + ")");
  return traj;
}

}  // namespace blowup_lab
