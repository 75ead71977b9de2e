#include "blowup_lab/selfsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "blowup_lab/errors.hpp"

namespace blowup_lab {

namespace {

double rho(double y) { return std::exp(-0.25 * y * y); }

double ipow(double x, int k) {
  double r = 1.0;
  for (int j = 0; j < k; ++j) r *= x;
  return r;
}

int frame_dimension(const SelfSimilarFrame& f) { return f.w.grid->dimension(); }

// sum_i quad_i node(i) + sum_b quad_weight_b bnd(b); node and bnd already carry rho.
template <class Node, class Bnd>
double region_integral(const SelfSimilarFrame& f, Node&& node, Bnd&& bnd) {
  double sum = 0.0;
  for (std::size_t i = 0; i < f.quad.size(); ++i)
    if (f.quad[i] != 0.0) sum += f.quad[i] * node(i);
  for (const auto& b : f.boundary) sum += b.quad_weight * bnd(b);
  return sum;
}

double surface_term(const SelfSimilarFrame& f) {
  double sum = 0.0;
  for (const auto& b : f.boundary) sum += b.grad_sq * b.y_dot_gamma * rho(b.y) * b.measure;
  return sum;
}

}  // namespace

SelfSimilarFrame to_selfsimilar_frame(const Field& snapshot, const ProblemSpec& spec, double a, double T,
                                      const GridPtr& y_grid) {
  if (!snapshot.grid || !y_grid) throw Error(ErrorKind::InvalidArgument, "frame needs a snapshot and a y-grid");
  if (!(snapshot.time < T))
    throw Error(ErrorKind::InvalidTime, "snapshot time " + std::to_string(snapshot.time) + " is not before T");
  const Grid& xg = *snapshot.grid;
  const Grid& yg = *y_grid;
  if (yg.kind() != xg.kind() || yg.dimension() != xg.dimension())
    throw Error(ErrorKind::InvalidArgument, "y-grid geometry does not match the snapshot grid");
  const double L = xg.extent();
  const bool radial = xg.kind() == GridKind::Radial;
  if (radial && std::abs(a) > 1e-12 * L)
    throw Error(ErrorKind::InvalidArgument, "radial frames are centred at a = 0");
  if (!radial && std::abs(a) > L) throw Error(ErrorKind::OutOfDomain, "a lies outside the domain");
  if (radial) a = 0.0;

  SelfSimilarFrame f;
  f.t = snapshot.time;
  f.T = T;
  f.a = a;
  f.p = spec.p;
  f.beta = spec.beta();
  const double tau = T - snapshot.time;
  f.s = -std::log(tau);
  const double sq = std::sqrt(tau);
  const double scale = std::pow(tau, f.beta);
  const double gscale = scale * sq;

  f.omega_hi = (L - a) / sq;
  f.omega_lo = radial ? 0.0 : (-L - a) / sq;
  f.omega_s_radius = radial ? f.omega_hi : std::min(-f.omega_lo, f.omega_hi);

  const Field grad = gradient(snapshot);
  f.w = Field(y_grid, snapshot.time);
  f.dw = Field(y_grid, snapshot.time);
  f.quad.assign(yg.size(), 0.0);

  const double edge = 1e-12 * L;
  std::ptrdiff_t i0 = -1, i1 = -1;
  for (std::size_t i = 0; i < yg.size(); ++i) {
    const double x = a + yg.node(i) * sq;
    const bool inside = x < L - edge && (radial || x > -L + edge);
    if (!inside) continue;
    if (i0 < 0) i0 = static_cast<std::ptrdiff_t>(i);
    i1 = static_cast<std::ptrdiff_t>(i);
    f.w.values[i] = scale * interpolate(snapshot, x);
    f.dw.values[i] = gscale * interpolate(grad, x);
  }
  if (i0 < 0) throw Error(ErrorKind::InvalidArgument, "no y-node lies inside the rescaled domain");

  const int N = yg.dimension();
  const double omega = unit_sphere_area(N);
  auto mu = [&](double y) { return radial ? omega * ipow(std::abs(y), N - 1) : 1.0; };
  const double h = yg.spacing();
  for (auto i = i0; i <= i1; ++i) f.quad[i] = h * mu(yg.node(i));
  f.quad[i0] *= 0.5;
  f.quad[i1] *= 0.5;

  const double y_ext = yg.extent() * (1.0 + 1e-12);
  const double g_hi = gscale * grad.values.back();
  if (f.omega_hi <= y_ext) {
    const double d = f.omega_hi - yg.node(i1);
    f.quad[i1] += 0.5 * d * mu(yg.node(i1));
    BoundaryTrace b;
    b.y = f.omega_hi;
    b.y_dot_gamma = f.omega_hi;
    b.grad_sq = g_hi * g_hi;
    b.measure = mu(f.omega_hi);
    b.quad_weight = 0.5 * d * mu(f.omega_hi);
    f.boundary.push_back(b);
  } else {
    f.truncated = true;
  }
  if (!radial) {
    const double g_lo = gscale * grad.values.front();
    if (f.omega_lo >= -y_ext) {
      const double d = yg.node(i0) - f.omega_lo;
      f.quad[i0] += 0.5 * d;
      BoundaryTrace b;
      b.y = f.omega_lo;
      b.y_dot_gamma = -f.omega_lo;
      b.grad_sq = g_lo * g_lo;
      b.measure = 1.0;
      b.quad_weight = 0.5 * d;
      f.boundary.push_back(b);
    } else {
      f.truncated = true;
    }
  }

  for (double v : f.w.values)
    if (!std::isfinite(v)) throw Error(ErrorKind::NanState, "non-finite value in self-similar frame");
  return f;
}

RescaledPotential rescaled_potential(const SelfSimilarFrame& frame, const ProblemSpec& spec) {
  const Grid& yg = *frame.w.grid;
  const double e = std::exp(-0.5 * frame.s);
  RescaledPotential v;
  v.value.assign(yg.size(), 0.0);
  v.y_dot_grad.assign(yg.size(), 0.0);
  for (std::size_t i = 0; i < yg.size(); ++i) {
    if (frame.quad[i] == 0.0) continue;
    const double y = yg.node(i);
    const double x = frame.a + y * e;
    v.value[i] = spec.potential(x);
    v.y_dot_grad[i] = y * e * spec.potential.derivative(x);
  }
  return v;
}

RescaledPotential constant_potential(const SelfSimilarFrame& frame, double value) {
  RescaledPotential v;
  v.value.assign(frame.w.size(), value);
  v.y_dot_grad.assign(frame.w.size(), 0.0);
  return v;
}

double energy_moment(const SelfSimilarFrame& frame, const RescaledPotential& vbar, int k, bool nonlinear) {
  if (k < 0 || k > 3)
    throw Error(ErrorKind::UnsupportedMoment, "energy moment k = " + std::to_string(k) + " not in [0, 3]");
  const auto& w = frame.w.values;
  const auto& dw = frame.dw.values;
  const double beta = frame.beta;
  const double q = frame.p + 1.0;
  auto density = [&](std::size_t i) {
    double e = 0.5 * (dw[i] * dw[i] + beta * w[i] * w[i]);
    if (nonlinear) e -= vbar.value[i] * std::pow(std::abs(w[i]), q) / q;
    return e;
  };
  const bool whole_grid = frame.boundary.empty() &&
                          std::none_of(frame.quad.begin(), frame.quad.end(), [](double x) { return x == 0.0; });
  if (whole_grid) {
    Field integrand(frame.w.grid);
    for (std::size_t i = 0; i < integrand.size(); ++i) integrand.values[i] = density(i);
    return weighted_moment_integral(integrand, k);
  }
  const Grid& yg = *frame.w.grid;
  return region_integral(
      frame, [&](std::size_t i) { return density(i) * ipow(yg.node(i) * yg.node(i), k) * rho(yg.node(i)); },
      [&](const BoundaryTrace& b) { return 0.5 * b.grad_sq * ipow(b.y * b.y, k) * rho(b.y); });
}

double tilde_E2_correction(const SelfSimilarFrame& frame) {
  const Grid& yg = *frame.w.grid;
  const int N = frame_dimension(frame);
  const auto& w = frame.w.values;
  return 0.5 * region_integral(
                   frame,
                   [&](std::size_t i) {
                     const double y = yg.node(i);
                     return (0.5 * y * y - N) * w[i] * w[i] * rho(y);
                   },
                   [](const BoundaryTrace&) { return 0.0; });
}

double tilde_E2(const SelfSimilarFrame& frame, const RescaledPotential& vbar) {
  return energy_moment(frame, vbar, 1) - tilde_E2_correction(frame);
}

double CutoffSpec::value(double y) const {
  if (std::isinf(R)) return 1.0;
  const double r = std::abs(y - center) / R;
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  const double t = r - 1.0;
  return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double CutoffSpec::derivative(double y) const {
  if (std::isinf(R)) return 0.0;
  const double r = std::abs(y - center) / R;
  if (r <= 1.0 || r >= 2.0) return 0.0;
  const double t = r - 1.0;
  const double dchi = -30.0 * t * t * (1.0 - t) * (1.0 - t);
  return dchi / R * (y >= center ? 1.0 : -1.0);
}

LocalEnergies local_energies(const SelfSimilarFrame& frame, const RescaledPotential& vbar,
                             const CutoffSpec& cutoff) {
  const Grid& yg = *frame.w.grid;
  if (!(cutoff.R > 0.0)) throw Error(ErrorKind::InvalidArgument, "cutoff radius must be positive");
  if (yg.kind() == GridKind::Radial && cutoff.center != 0.0)
    throw Error(ErrorKind::InvalidArgument, "radial cutoffs are centred at 0");
  if (!std::isinf(cutoff.R) && std::abs(cutoff.center) + 2.0 * cutoff.R > yg.extent() * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidArgument, "cutoff support exceeds the y-grid");

  const auto& w = frame.w.values;
  const auto& dw = frame.dw.values;
  const double beta = frame.beta;
  const double q = frame.p + 1.0;
  LocalEnergies out;
  auto bnd_grad = [&](const BoundaryTrace& b) {
    const double ps = cutoff.value(b.y);
    return 0.5 * ps * ps * b.grad_sq * rho(b.y);
  };
  out.E_psi = region_integral(
      frame,
      [&](std::size_t i) {
        const double y = yg.node(i);
        const double ps = cutoff.value(y), dps = cutoff.derivative(y);
        const double g = dps * w[i] + ps * dw[i];
        const double e = 0.5 * (g * g + (beta * ps * ps - dps * dps) * w[i] * w[i]) -
                         vbar.value[i] * ps * ps * std::pow(std::abs(w[i]), q) / q;
        return e * rho(y);
      },
      bnd_grad);
  out.script_E_psi = region_integral(
      frame,
      [&](std::size_t i) {
        const double y = yg.node(i);
        const double ps = cutoff.value(y);
        const double e = 0.5 * ps * ps * (dw[i] * dw[i] + beta * w[i] * w[i]) -
                         vbar.value[i] * ps * ps * std::pow(std::abs(w[i]), q) / q;
        return e * rho(y);
      },
      bnd_grad);
  out.bridge = region_integral(
      frame,
      [&](std::size_t i) {
        const double y = yg.node(i);
        return cutoff.value(y) * w[i] * cutoff.derivative(y) * dw[i] * rho(y);
      },
      [](const BoundaryTrace&) { return 0.0; });
  out.bridge_residual = std::abs(out.E_psi - out.script_E_psi - out.bridge);
  return out;
}

std::string to_string(IdentityId id) {
  switch (id) {
    case IdentityId::Var: return "var";
    case IdentityId::WVar: return "wvar";
    case IdentityId::Dissipation: return "dissipation";
    case IdentityId::Pohozaev: return "pohozaev";
  }
  return "var";
}

namespace {

// Shared bookkeeping for s-differences over two or three frames.
struct Stencil {
  std::span<const SelfSimilarFrame> f;
  std::span<const RescaledPotential> v;
  double ds = 0.0;
  bool centred = false;

  template <class Fn>
  double deriv(Fn&& x) const {
    if (centred) return (x(f[2], v[2]) - x(f[0], v[0])) / (2.0 * ds);
    return (x(f[1], v[1]) - x(f[0], v[0])) / ds;
  }
  template <class Fn>
  double mid(Fn&& x) const {
    if (centred) return x(f[1], v[1]);
    return 0.5 * (x(f[0], v[0]) + x(f[1], v[1]));
  }
  double ws(std::size_t i) const {
    if (centred) return (f[2].w.values[i] - f[0].w.values[i]) / (2.0 * ds);
    return (f[1].w.values[i] - f[0].w.values[i]) / ds;
  }
  // Integral over the evaluation point of node(i, ws_i) with boundary value bnd(frame, trace).
  template <class Node, class Bnd>
  double ws_integral(Node&& node, Bnd&& bnd) const {
    auto one = [&](const SelfSimilarFrame& fr) {
      return region_integral(fr, [&](std::size_t i) { return node(fr, i, ws(i)); },
                             [&](const BoundaryTrace& b) { return bnd(b); });
    };
    if (centred) return one(f[1]);
    // Pair: node values at the midpoint averaged through each frame's quadrature.
    return 0.5 * (one(f[0]) + one(f[1]));
  }
};

Stencil make_stencil(std::span<const SelfSimilarFrame> frames, std::span<const RescaledPotential> vbar,
                     double rtol) {
  if (frames.size() != 2 && frames.size() != 3)
    throw Error(ErrorKind::InvalidArgument, "identity residuals take two or three frames");
  if (vbar.size() != frames.size())
    throw Error(ErrorKind::InvalidArgument, "one rescaled potential per frame is required");
  const Grid& g0 = *frames[0].w.grid;
  for (const auto& fr : frames) {
    const Grid& g = *fr.w.grid;
    if (g.kind() != g0.kind() || g.size() != g0.size() || g.extent() != g0.extent())
      throw Error(ErrorKind::InvalidArgument, "frames must share a y-grid");
  }
  for (std::size_t j = 0; j < frames.size(); ++j)
    if (vbar[j].value.size() != frames[j].w.size())
      throw Error(ErrorKind::InvalidArgument, "rescaled potential does not match the frame grid");
  Stencil st;
  st.f = frames;
  st.v = vbar;
  st.centred = frames.size() == 3;
  st.ds = frames[1].s - frames[0].s;
  if (!(st.ds > 0.0)) throw Error(ErrorKind::InvalidArgument, "frames must be increasing in s");
  if (st.centred && std::abs((frames[2].s - frames[1].s) - st.ds) > rtol * st.ds)
    throw Error(ErrorKind::InvalidArgument, "frames are not equally spaced in s");
  return st;
}

double weighted_l2(const SelfSimilarFrame& fr, int k) {
  const Grid& yg = *fr.w.grid;
  const auto& w = fr.w.values;
  return region_integral(
      fr,
      [&](std::size_t i) {
        const double y = yg.node(i);
        return w[i] * w[i] * ipow(y * y, k) * rho(y);
      },
      [](const BoundaryTrace&) { return 0.0; });
}

double potential_moment(const SelfSimilarFrame& fr, const RescaledPotential& v, int k) {
  const Grid& yg = *fr.w.grid;
  const auto& w = fr.w.values;
  const double q = fr.p + 1.0;
  return region_integral(
      fr,
      [&](std::size_t i) {
        const double y = yg.node(i);
        return v.value[i] * std::pow(std::abs(w[i]), q) * ipow(y * y, k) * rho(y);
      },
      [](const BoundaryTrace&) { return 0.0; });
}

double potential_drift(const SelfSimilarFrame& fr, const RescaledPotential& v) {
  const Grid& yg = *fr.w.grid;
  const auto& w = fr.w.values;
  const double q = fr.p + 1.0;
  return region_integral(
      fr, [&](std::size_t i) { return v.y_dot_grad[i] * std::pow(std::abs(w[i]), q) * rho(yg.node(i)); },
      [](const BoundaryTrace&) { return 0.0; });
}

double gradient_mass(const SelfSimilarFrame& fr, double c, double quartic) {
  const Grid& yg = *fr.w.grid;
  const auto& dw = fr.dw.values;
  return region_integral(
      fr,
      [&](std::size_t i) {
        const double y = yg.node(i);
        return dw[i] * dw[i] * (c + quartic * y * y) * rho(y);
      },
      [&](const BoundaryTrace& b) { return b.grad_sq * (c + quartic * b.y * b.y) * rho(b.y); });
}

// LHS - RHS of the Pohozaev identity with c2 = 0.
double pohozaev_defect(const Stencil& st) {
  const auto& f0 = st.f[0];
  const double p = f0.p;
  const int N = frame_dimension(f0);
  const Grid& yg = *f0.w.grid;
  auto quad_moment = [&](const SelfSimilarFrame& fr, const RescaledPotential&) {
    const auto& w = fr.w.values;
    return region_integral(
        fr,
        [&](std::size_t i) {
          const double y = yg.node(i);
          return (0.5 * y * y - N) * w[i] * w[i] * rho(y);
        },
        [](const BoundaryTrace&) { return 0.0; });
  };
  const double transport = st.ws_integral(
      [&](const SelfSimilarFrame& fr, std::size_t i, double ws) {
        const double y = yg.node(i);
        double ydw = y * fr.dw.values[i];
        if (!st.centred) ydw = y * 0.5 * (st.f[0].dw.values[i] + st.f[1].dw.values[i]);
        return ydw * ws * rho(y);
      },
      [&](const BoundaryTrace& b) { return -0.5 * b.y_dot_gamma * b.y_dot_gamma * b.grad_sq * rho(b.y); });
  const double lhs = 0.5 * st.deriv(quad_moment) - (p + 1.0) * transport;
  const double rhs = st.mid([&](const SelfSimilarFrame& fr, const RescaledPotential& v) {
    return gradient_mass(fr, 0.0, 0.25 * (p - 1.0)) - 0.5 * (p + 1.0) * surface_term(fr) +
           potential_drift(fr, v);
  });
  return lhs - rhs;
}

}  // namespace

PohozaevParts pohozaev_parts(std::span<const SelfSimilarFrame> frames, std::span<const RescaledPotential> vbar) {
  const Stencil st = make_stencil(frames, vbar, 1e-4);
  if (frames[0].w.grid->kind() != GridKind::Radial)
    throw Error(ErrorKind::InvalidArgument, "the Pohozaev residual is defined on radial frames only");
  PohozaevParts parts;
  parts.defect = pohozaev_defect(st);
  parts.gradient_mass =
      st.mid([](const SelfSimilarFrame& fr, const RescaledPotential&) { return gradient_mass(fr, 1.0, 0.0); });
  return parts;
}

double identity_residual(std::span<const SelfSimilarFrame> frames, std::span<const RescaledPotential> vbar,
                         IdentityId id, const IdentityOptions& opts) {
  const Stencil st = make_stencil(frames, vbar, opts.spacing_rtol);
  const double p = frames[0].p;
  const int N = frame_dimension(frames[0]);
  const Grid& yg = *frames[0].w.grid;
  const double nl = (p - 1.0) / (p + 1.0);

  switch (id) {
    case IdentityId::Var: {
      const double lhs = 0.5 * st.deriv([](const SelfSimilarFrame& fr, const RescaledPotential&) {
        return weighted_l2(fr, 0);
      });
      const double rhs = st.mid([&](const SelfSimilarFrame& fr, const RescaledPotential& v) {
        return -2.0 * energy_moment(fr, v, 0) + nl * potential_moment(fr, v, 0);
      });
      return std::abs(lhs - rhs);
    }
    case IdentityId::WVar: {
      const int k = opts.k;
      if (k < 1 || k > 3)
        throw Error(ErrorKind::UnsupportedMoment, "wvar moment k = " + std::to_string(k) + " not in [1, 3]");
      const double lhs = 0.5 * st.deriv([&](const SelfSimilarFrame& fr, const RescaledPotential&) {
        return weighted_l2(fr, k);
      });
      const double rhs = st.mid([&](const SelfSimilarFrame& fr, const RescaledPotential& v) {
        const auto& w = fr.w.values;
        const double shift = region_integral(
            fr,
            [&](std::size_t i) {
              const double y = yg.node(i);
              return k * (N + 2.0 * k - 2.0 - 0.5 * y * y) * w[i] * w[i] * ipow(y * y, k - 1) * rho(y);
            },
            [](const BoundaryTrace&) { return 0.0; });
        return -2.0 * energy_moment(fr, v, k) + nl * potential_moment(fr, v, k) + shift;
      });
      return std::abs(lhs - rhs);
    }
    case IdentityId::Dissipation: {
      const double lhs = st.ws_integral(
          [&](const SelfSimilarFrame&, std::size_t i, double ws) { return ws * ws * rho(yg.node(i)); },
          [&](const BoundaryTrace& b) {
            return 0.25 * b.y_dot_gamma * b.y_dot_gamma * b.grad_sq * rho(b.y);
          });
      const double dE = st.deriv([](const SelfSimilarFrame& fr, const RescaledPotential& v) {
        return energy_moment(fr, v, 0);
      });
      const double rest = st.mid([&](const SelfSimilarFrame& fr, const RescaledPotential& v) {
        return -0.25 * surface_term(fr) + potential_drift(fr, v) / (2.0 * (p + 1.0));
      });
      return std::abs(lhs - (-dE + rest));
    }
    case IdentityId::Pohozaev: {
      if (yg.kind() != GridKind::Radial)
        throw Error(ErrorKind::InvalidArgument, "the Pohozaev residual is defined on radial frames only");
      const double G =
          st.mid([](const SelfSimilarFrame& fr, const RescaledPotential&) { return gradient_mass(fr, 1.0, 0.0); });
      return std::abs(pohozaev_defect(st) - opts.c2 * G);
    }
  }
  return 0.0;
}

double fit_pohozaev_c2(std::span<const SelfSimilarFrame> frames, std::span<const RescaledPotential> vbar) {
  if (frames.size() < 3) throw Error(ErrorKind::InsufficientData, "fitting c2 needs at least three frames");
  double num = 0.0, den = 0.0;
  for (std::size_t j = 1; j + 1 < frames.size(); ++j) {
    const auto parts = pohozaev_parts(frames.subspan(j - 1, 3), vbar.subspan(j - 1, 3));
    num += parts.defect * parts.gradient_mass;
    den += parts.gradient_mass * parts.gradient_mass;
  }
  return den > 0.0 ? num / den : 0.0;
}

double monotonicity_defect(std::span<const double> energies) {
  double defect = 0.0;
  for (std::size_t j = 1; j < energies.size(); ++j) defect = std::max(defect, energies[j] - energies[j - 1]);
  return defect;
}

std::vector<LimitSample> limit_convergence_check(std::span<const SelfSimilarFrame> frames, double a,
                                                 const ProblemSpec& spec) {
  const double k = limit_constant_k(spec, a);
  std::vector<LimitSample> out;
  out.reserve(frames.size());
  for (const auto& fr : frames) {
    const Grid& yg = *fr.w.grid;
    double dev = 0.0;
    for (std::size_t i = 0; i < yg.size(); ++i)
      if (std::abs(yg.node(i)) <= 1.0 + 1e-12) dev = std::max(dev, std::abs(fr.w.values[i] - k));
    out.push_back({fr.s, dev});
  }
  return out;
}

bool limit_trend_ok(std::span<const LimitSample> series, double slack) {
  if (series.size() < 3) return false;
  const std::size_t n = series.size();
  for (std::size_t j = n - 2; j < n; ++j)
    if (series[j].deviation > (1.0 + slack) * series[j - 1].deviation) return false;
  return true;
}

EnergyReport build_energy_report(std::span<const SelfSimilarFrame> frames, const ProblemSpec& spec,
                                 std::span<const CutoffSpec> cutoffs) {
  if (frames.size() < 3) throw Error(ErrorKind::InsufficientData, "an energy report needs at least three frames");
  const std::size_t n = frames.size();
  std::vector<RescaledPotential> vbar;
  vbar.reserve(n);
  for (const auto& fr : frames) vbar.push_back(rescaled_potential(fr, spec));
  const std::span<const RescaledPotential> vs(vbar);

  EnergyReport rep;
  rep.a = frames[0].a;
  rep.k_a = limit_constant_k(spec, rep.a);
  rep.pohozaev_applicable = frames[0].w.grid->kind() == GridKind::Radial;
  if (rep.pohozaev_applicable) rep.pohozaev_c2 = fit_pohozaev_c2(frames, vs);
  const auto dev = limit_convergence_check(frames, rep.a, spec);

  for (std::size_t j = 0; j < n; ++j) {
    const auto& fr = frames[j];
    EnergyRow row;
    row.s = fr.s;
    row.E = energy_moment(fr, vbar[j], 0);
    row.E2 = energy_moment(fr, vbar[j], 1);
    row.E4 = energy_moment(fr, vbar[j], 2);
    row.E6 = energy_moment(fr, vbar[j], 3);
    row.tildeE2 = row.E2 - tilde_E2_correction(fr);
    const std::size_t lo = j == 0 ? 0 : (j + 1 == n ? n - 2 : j - 1);
    const std::size_t len = (j == 0 || j + 1 == n) ? 2 : 3;
    const auto fs = frames.subspan(lo, len);
    const auto vv = vs.subspan(lo, len);
    row.res_var = identity_residual(fs, vv, IdentityId::Var);
    row.res_wvar1 = identity_residual(fs, vv, IdentityId::WVar);
    row.res_dissipation = identity_residual(fs, vv, IdentityId::Dissipation);
    if (rep.pohozaev_applicable) {
      IdentityOptions opts;
      opts.c2 = rep.pohozaev_c2;
      row.res_pohozaev = identity_residual(fs, vv, IdentityId::Pohozaev, opts);
    }
    row.dev_core = dev[j].deviation;
    for (const auto& c : cutoffs) row.local.push_back(local_energies(fr, vbar[j], c));
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

double monotonicity_check_constV(const EnergyReport& report, const ProblemSpec& spec) {
  if (spec.potential.kind != FunctionKind::Constant)
    throw Error(ErrorKind::InvalidArgument, "the monotonicity check needs a constant potential");
  std::vector<double> e;
  e.reserve(report.rows.size());
  for (const auto& r : report.rows) e.push_back(r.E);
  return monotonicity_defect(e);
}

std::string energy_report_csv(const EnergyReport& report) {
  std::ostringstream out;
  out << "s,E,E2,E4,E6,tildeE2,res_var,res_wvar1,res_dissipation,res_pohozaev,dev_core\n";
  char buf[64];
  auto put = [&](double x, bool last = false) {
    std::snprintf(buf, sizeof buf, "%.12g", x);
    out << buf << (last ? '\n' : ',');
  };
  for (const auto& r : report.rows) {
    put(r.s);
    put(r.E);
    put(r.E2);
    put(r.E4);
    put(r.E6);
    put(r.tildeE2);
    put(r.res_var);
    put(r.res_wvar1);
    put(r.res_dissipation);
    put(r.res_pohozaev);
    put(r.dev_core, true);
  }
  return out.str();
}

std::vector<double> FramePlan::s_values() const {
  if (count < 2) throw Error(ErrorKind::InvalidArgument, "a frame plan needs at least two frames");
  if (!(s_end > s_start)) throw Error(ErrorKind::InvalidArgument, "frame plan needs s_end > s_start");
  std::vector<double> s(count);
  for (int j = 0; j < count; ++j) s[j] = s_start + (s_end - s_start) * j / (count - 1);
  return s;
}

std::vector<double> FramePlan::times(double T) const {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidTime, "blow-up time must be positive");
  if (s_start <= -std::log(T)) throw Error(ErrorKind::InvalidTime, "s_start precedes s0 = -log T");
  std::vector<double> t;
  for (double s : s_values()) t.push_back(T - std::exp(-s));
  return t;
}

FramePlan default_frame_plan(double T, double h, int count) {
  if (!(T > 0.0) || !(h > 0.0)) throw Error(ErrorKind::InvalidArgument, "frame plan needs T > 0 and h > 0");
  FramePlan plan;
  plan.count = count;
  plan.s_end = 2.0 * std::log(0.1 / h);
  plan.s_start = std::max(plan.s_end - 5.0, -std::log(T) + 0.5);
  if (!(plan.s_end > plan.s_start))
    throw Error(ErrorKind::InvalidArgument, "grid too coarse for a resolved frame range");
  return plan;
}

std::vector<Field> select_snapshots(const Trajectory& traj, std::span<const double> times) {
  std::vector<Field> out;
  for (double t : times) {
    const double tol = 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1e-300);
    auto it = std::find_if(traj.snapshots.begin(), traj.snapshots.end(),
                           [&](const Field& f) { return std::abs(f.time - t) <= tol; });
    if (it == traj.snapshots.end())
      throw Error(ErrorKind::InsufficientData, "no snapshot at t = " + std::to_string(t));
    out.push_back(*it);
  }
  return out;
}

std::vector<SelfSimilarFrame> build_frames(std::span<const Field> snapshots, const ProblemSpec& spec, double a,
                                           double T, const GridPtr& y_grid) {
  std::vector<SelfSimilarFrame> out;
  out.reserve(snapshots.size());
  for (const auto& snap : snapshots) out.push_back(to_selfsimilar_frame(snap, spec, a, T, y_grid));
  for (std::size_t j = 1; j < out.size(); ++j)
    if (!(out[j].s > out[j - 1].s)) throw Error(ErrorKind::InvalidArgument, "frames must be increasing in s");
  return out;
}

GridPtr build_y_grid(const ProblemSpec& spec, double y_max, int m_y) {
  return build_grid(spec.grid_kind(), spec.domain == DomainKind::Interval ? 1 : spec.N, y_max, m_y);
}

}  // namespace blowup_lab
