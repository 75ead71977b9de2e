#include "blowup_lab/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "blowup_lab/errors.hpp"

namespace blowup_lab {

FunctionSpec FunctionSpec::constant(double v) {
  FunctionSpec f;
  f.kind = FunctionKind::Constant;
  f.value = v;
  return f;
}

FunctionSpec FunctionSpec::gaussian_bump(double base, double amp, double center, double width) {
  if (!(width > 0.0)) throw Error(ErrorKind::InvalidArgument, "gaussian_bump width must be positive");
  FunctionSpec f;
  f.kind = FunctionKind::GaussianBump;
  f.base = base;
  f.amp = amp;
  f.center = center;
  f.width = width;
  return f;
}

FunctionSpec FunctionSpec::cosine_cap(double extent) {
  FunctionSpec f;
  f.kind = FunctionKind::CosineCap;
  f.extent = extent;
  return f;
}

FunctionSpec FunctionSpec::table(std::vector<double> nodes, std::vector<double> values) {
  if (nodes.size() < 2 || nodes.size() != values.size())
    throw Error(ErrorKind::InvalidArgument, "table needs >= 2 nodes with matching values");
  if (!std::is_sorted(nodes.begin(), nodes.end()) ||
      std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
    throw Error(ErrorKind::InvalidArgument, "table nodes must be strictly increasing");
  FunctionSpec f;
  f.kind = FunctionKind::Table;
  f.nodes = std::move(nodes);
  f.values = std::move(values);
  return f;
}

namespace {

std::size_t table_segment(const std::vector<double>& nodes, double x) {
  if (x < nodes.front() - 1e-12 || x > nodes.back() + 1e-12)
    throw Error(ErrorKind::OutOfDomain, "table does not cover x = " + std::to_string(x));
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  std::size_t j = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
  return std::min(j, nodes.size() - 2);
}

}  // namespace

double FunctionSpec::operator()(double x) const {
  switch (kind) {
    case FunctionKind::Constant:
      return value;
    case FunctionKind::GaussianBump: {
      const double d = x - center;
      return base + amp * std::exp(-d * d / width);
    }
    case FunctionKind::CosineCap:
      if (std::abs(x) >= extent) return 0.0;
      return std::cos(0.5 * std::numbers::pi * x / extent);
    case FunctionKind::Table: {
      const std::size_t j = table_segment(nodes, x);
      const double theta = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
      return (1.0 - theta) * values[j] + theta * values[j + 1];
    }
  }
  return 0.0;
}

double FunctionSpec::derivative(double x) const {
  switch (kind) {
    case FunctionKind::Constant:
      return 0.0;
    case FunctionKind::GaussianBump: {
      const double d = x - center;
      return -2.0 * d / width * amp * std::exp(-d * d / width);
    }
    case FunctionKind::CosineCap: {
      if (std::abs(x) >= extent) return 0.0;
      const double k = 0.5 * std::numbers::pi / extent;
      return -k * std::sin(k * x);
    }
    case FunctionKind::Table: {
      const std::size_t j = table_segment(nodes, x);
      return (values[j + 1] - values[j]) / (nodes[j + 1] - nodes[j]);
    }
  }
  return 0.0;
}

std::string to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::Constant: return "constant";
    case FunctionKind::GaussianBump: return "gaussian_bump";
    case FunctionKind::CosineCap: return "cosine_cap";
    case FunctionKind::Table: return "table";
  }
  return "constant";
}

FunctionKind function_kind_from_string(const std::string& name) {
  if (name == "constant") return FunctionKind::Constant;
  if (name == "gaussian_bump") return FunctionKind::GaussianBump;
  if (name == "cosine_cap") return FunctionKind::CosineCap;
  if (name == "table") return FunctionKind::Table;
  throw Error(ErrorKind::InvalidArgument, "unknown function kind '" + name + "'");
}

bool ProblemSpec::subcritical() const {
  if (N <= 2) return true;
  return p < (N + 2.0) / (N - 2.0);
}

GridPtr build_problem_grid(const ProblemSpec& spec, int m) {
  return build_grid(spec.grid_kind(), spec.domain == DomainKind::Interval ? 1 : spec.N,
                    spec.extent, m);
}

ValidationReport validate_spec(const ProblemSpec& spec, const Grid& grid) {
  if (grid.kind() != spec.grid_kind() || std::abs(grid.extent() - spec.extent) > 1e-12 * spec.extent)
    throw Error(ErrorKind::InvalidArgument, "grid does not match the problem domain");
  if (spec.domain == DomainKind::Interval && spec.N != 1)
    throw Error(ErrorKind::InvalidProblem, "interval domains require N = 1");
  if (spec.N < 1) throw Error(ErrorKind::InvalidProblem, "N must be >= 1");

  ValidationReport report;
  auto add = [&](std::string name, bool ok, std::string detail) {
    report.checks.push_back({std::move(name), ok, std::move(detail)});
  };

  if (!(spec.p > 1.0) || !std::isfinite(spec.p))
    throw Error(ErrorKind::InvalidProblem, "exponent p must exceed 1");
  add("p>1", true, "p = " + std::to_string(spec.p));

  if (!(spec.potential_floor > 0.0))
    throw Error(ErrorKind::InvalidProblem, "potential floor c must be positive");

  double v_min = std::numeric_limits<double>::infinity();
  double phi_max = 0.0;
  double phi_interior_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.node(i);
    const double v = spec.potential(x);
    const double ph = spec.profile(x);
    if (!std::isfinite(v) || !std::isfinite(ph))
      throw Error(ErrorKind::InvalidProblem, "V or phi not finite at x = " + std::to_string(x));
    v_min = std::min(v_min, v);
    phi_max = std::max(phi_max, ph);
    const bool boundary = i + 1 == grid.size() || (grid.kind() == GridKind::Interval && i == 0);
    if (!boundary) phi_interior_min = std::min(phi_interior_min, ph);
  }
  if (v_min < spec.potential_floor) {
    std::ostringstream msg;
    msg << "V attains " << v_min << " below the floor c = " << spec.potential_floor;
    throw Error(ErrorKind::InvalidProblem, msg.str());
  }
  add("V>=c", true, "min V = " + std::to_string(v_min));

  if (!(phi_interior_min > 0.0))
    throw Error(ErrorKind::InvalidProblem, "phi must be positive at interior nodes");
  add("phi>0", true, "min interior phi = " + std::to_string(phi_interior_min));

  const double tol = 1e-12 * std::max(1.0, phi_max);
  double phi_boundary = std::abs(spec.profile(spec.extent));
  if (spec.domain == DomainKind::Interval)
    phi_boundary = std::max(phi_boundary, std::abs(spec.profile(-spec.extent)));
  if (phi_boundary > tol) throw Error(ErrorKind::InvalidProblem, "phi must vanish on the boundary");
  add("phi|boundary=0", true, "");

  const bool sub = spec.subcritical();
  std::string bound = spec.N >= 3 ? std::to_string((spec.N + 2.0) / (spec.N - 2.0)) : "inf";
  add("subcritical", sub, "p = " + std::to_string(spec.p) + ", bound " + bound);
  if (!sub) {
    report.theorem3_applicable = false;
    report.warnings.push_back("theorem3_inapplicable");
  }
  return report;
}

AResult compute_A(const ProblemSpec& spec, int samples) {
  if (samples < 8) throw Error(ErrorKind::InvalidArgument, "A scan needs >= 8 samples");
  const double lo = spec.domain == DomainKind::Interval ? -spec.extent : 0.0;
  const double hi = spec.extent;
  AResult best;
  best.max_value = -1.0;
  for (int i = 0; i <= samples; ++i) {
    const double x = lo + (hi - lo) * i / samples;
    const double ph = spec.profile(x);
    const double val = std::pow(std::max(ph, 0.0), spec.p - 1.0) * spec.potential(x);
    if (val > best.max_value) {
      best.max_value = val;
      best.maximizer = x;
    }
  }
  if (!(best.max_value > 0.0))
    throw Error(ErrorKind::InvalidProblem, "phi^{p-1} V has no positive maximum");
  best.A = 1.0 / best.max_value;
  return best;
}

AResult compute_A(const ProblemSpec& spec, const Grid& grid) {
  return compute_A(spec, 16 * grid.intervals());
}

double ode_reference_time(double A, double p, double M) {
  if (!(M > 0.0)) throw Error(ErrorKind::InvalidArgument, "amplitude M must be positive");
  return A * std::pow(M, 1.0 - p) / (p - 1.0);
}

double ode_reference_time(const ProblemSpec& spec, double M) {
  return ode_reference_time(compute_A(spec, 100000).A, spec.p, M);
}

double limit_constant_k(const ProblemSpec& spec, double a) {
  return std::pow((spec.p - 1.0) * spec.potential(a), -1.0 / (spec.p - 1.0));
}

}  // namespace blowup_lab
