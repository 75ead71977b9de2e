#include "blowup_lab/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "blowup_lab/errors.hpp"

namespace blowup_lab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::UnsupportedMoment: return "unsupported-moment";
    case ErrorKind::OutOfDomain: return "out-of-domain";
    case ErrorKind::InvalidProblem: return "invalid-problem";
    case ErrorKind::NanState: return "nan-state";
    case ErrorKind::LikelyGlobalSolution: return "likely-global-solution";
    case ErrorKind::NotBlowingUp: return "not-blowing-up";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::AmbiguousLocation: return "ambiguous-location";
    case ErrorKind::InvalidTime: return "invalid-time";
    case ErrorKind::EmptySweep: return "empty-sweep";
    case ErrorKind::Theorem3Inapplicable: return "theorem3_inapplicable";
    case ErrorKind::ConfigError: return "config-error";
  }
  return "unknown";
}

double unit_sphere_area(int N) {
  const double n = N;
  return 2.0 * std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0);
}

GridPtr build_grid(GridKind kind, int N, double extent, int m) {
  if (!(extent > 0.0) || !std::isfinite(extent))
    throw Error(ErrorKind::InvalidArgument, "grid extent must be positive");
  if (m < 8) throw Error(ErrorKind::InvalidArgument, "grid needs m >= 8 intervals");
  if (N < 1) throw Error(ErrorKind::InvalidArgument, "dimension must be >= 1");
  if (kind == GridKind::Interval && N != 1)
    throw Error(ErrorKind::InvalidArgument, "interval grids are one-dimensional");

  std::shared_ptr<Grid> g(new Grid());
  g->kind_ = kind;
  g->dimension_ = N;
  g->extent_ = extent;
  g->nodes_.resize(static_cast<std::size_t>(m) + 1);
  if (kind == GridKind::Interval) {
    // (2i - m) is exactly antisymmetric, so mirrored nodes are exact negatives.
    for (int i = 0; i <= m; ++i) g->nodes_[i] = (2.0 * i - m) * extent / m;
    g->h_ = 2.0 * extent / m;
  } else {
    for (int i = 0; i <= m; ++i) g->nodes_[i] = i * extent / m;
    g->h_ = extent / m;
  }

  g->weights_.resize(g->nodes_.size());
  const double area = kind == GridKind::Radial ? unit_sphere_area(N) : 1.0;
  for (std::size_t i = 0; i < g->nodes_.size(); ++i) {
    double w = g->h_;
    if (kind == GridKind::Radial) w *= area * std::pow(g->nodes_[i], N - 1);
    if (i == 0 || i + 1 == g->nodes_.size()) w *= 0.5;
    g->weights_[i] = w;
  }
  return g;
}

Field::Field(GridPtr g, double t) : grid(std::move(g)), time(t) {
  values.assign(grid->size(), 0.0);
}

Field::Field(GridPtr g, std::vector<double> v, double t)
    : grid(std::move(g)), values(std::move(v)), time(t) {
  if (values.size() != grid->size())
    throw Error(ErrorKind::InvalidArgument, "field length does not match grid");
}

LaplacianStencil::LaplacianStencil(const Grid& grid)
    : kind_(grid.kind()), inv_h2_(1.0 / (grid.spacing() * grid.spacing())) {
  if (kind_ == GridKind::Radial) {
    const int N = grid.dimension();
    const double h = grid.spacing();
    dim_factor_ = N;
    center_coeff_ = 2.0 * N * inv_h2_;
    lower_.assign(grid.size(), 0.0);
    upper_.assign(grid.size(), 0.0);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
      const double drift = (N - 1) / (2.0 * h * grid.node(i));
      lower_[i] = inv_h2_ - drift;
      upper_[i] = inv_h2_ + drift;
    }
  }
}

void LaplacianStencil::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t n = in.size();
  if (kind_ == GridKind::Interval) {
    out[0] = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i)
      out[i] = ((in[i - 1] + in[i + 1]) - 2.0 * in[i]) * inv_h2_;
    out[n - 1] = 0.0;
  } else {
    out[0] = center_coeff_ * (in[1] - in[0]);
    const double diag = -2.0 * inv_h2_;
    const double* lo = lower_.data();
    const double* up = upper_.data();
    for (std::size_t i = 1; i + 1 < n; ++i)
      out[i] = lo[i] * in[i - 1] + diag * in[i] + up[i] * in[i + 1];
    out[n - 1] = 0.0;
  }
}

Field laplacian(const Field& f) {
  Field out(f.grid, f.time);
  LaplacianStencil(*f.grid).apply(f.values, out.values);
  return out;
}

Field gradient(const Field& f) {
  const Grid& g = *f.grid;
  const double h = g.spacing();
  const std::size_t n = f.size();
  Field out(f.grid, f.time);
  const auto& v = f.values;
  for (std::size_t i = 1; i + 1 < n; ++i) out.values[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
  out.values[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
  if (g.kind() == GridKind::Radial)
    out.values[0] = 0.0;  // radial symmetry
  else
    out.values[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
  return out;
}

Field gradient_sq(const Field& f) {
  Field out = gradient(f);
  for (double& x : out.values) x *= x;
  return out;
}

double integrate(const Field& f) {
  const auto w = f.grid->measure_weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += w[i] * f.values[i];
  return sum;
}

double weighted_moment_integral(const Field& f, int k) {
  if (k < 0 || k > 6)
    throw Error(ErrorKind::UnsupportedMoment, "moment order " + std::to_string(k) + " not in [0, 6]");
  const Grid& g = *f.grid;
  const auto w = g.measure_weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double y2 = g.node(i) * g.node(i);
    double moment = 1.0;
    for (int j = 0; j < k; ++j) moment *= y2;
    sum += w[i] * f.values[i] * moment * std::exp(-0.25 * y2);
  }
  return sum;
}

double interpolate(const Field& f, double x) {
  const Grid& g = *f.grid;
  const double lo = g.node(0);
  const double hi = g.node(g.size() - 1);
  const double slack = 1e-12 * g.spacing();
  if (!(x >= lo - slack && x <= hi + slack))
    throw Error(ErrorKind::OutOfDomain, "interpolation point " + std::to_string(x) + " outside grid");
  const double pos = (std::clamp(x, lo, hi) - lo) / g.spacing();
  const double nearest = std::round(pos);
  if (std::abs(pos - nearest) <= 1e-12 * std::max(1.0, nearest))
    return f.values[static_cast<std::size_t>(nearest)];
  auto i = static_cast<std::size_t>(std::floor(pos));
  if (i >= g.size() - 1) i = g.size() - 2;
  const double theta = std::clamp(pos - static_cast<double>(i), 0.0, 1.0);
  if (theta == 0.0) return f.values[i];
  if (theta == 1.0) return f.values[i + 1];
  return (1.0 - theta) * f.values[i] + theta * f.values[i + 1];
}

}  // namespace blowup_lab
