#include "dwell/reduced_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/numeric/odeint.hpp>

namespace dwell {

namespace {

constexpr double kChartFloor = 1e-8;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::remainder(a, kTwoPi);
  return a;
}

using Packed = std::array<double, 4>;

}  // namespace

double ReducedParams::n_cr() const {
  const double denom = g * (a00() - 3.0 * a01());
  if (std::abs(denom) < 1e-300) throw Error(ErrorKind::DegenerateDenominator, "a00 - 3 a01 vanishes");
  return omega10() / denom;
}

ReducedParams ReducedParams::unit(double n_cr, double omega0) {
  ReducedParams p;
  p.omega0 = omega0;
  p.omega1 = omega0 + 2.0 * n_cr;
  return p;
}

ReducedParams ReducedParams::tensor(const SpectralData& d) {
  ReducedParams p;
  p.omega0 = d.omega0;
  p.omega1 = d.omega1;
  p.g = d.g;
  p.mode = CoefficientMode::Tensor;
  p.a = d.a;
  return p;
}

ModeAmplitudes vf_modes(const ModeAmplitudes& s, const ReducedParams& p) {
  const cplx I(0.0, 1.0);
  const double n0 = std::norm(s.rho0), n1 = std::norm(s.rho1);
  const cplx f0 = p.omega0 * s.rho0 +
                  p.g * (p.a00() * n0 * s.rho0 + p.a01() * (2.0 * n1 * s.rho0 + s.rho1 * s.rho1 * std::conj(s.rho0)));
  const cplx f1 = p.omega1 * s.rho1 +
                  p.g * (p.a11() * n1 * s.rho1 + p.a01() * (2.0 * n0 * s.rho1 + s.rho0 * s.rho0 * std::conj(s.rho1)));
  return {-I * f0, -I * f1};
}

CartesianChart vf_cartesian(const CartesianChart& s, const ReducedParams& p) {
  if (s.A <= kChartFloor) throw Error(ErrorKind::ChartBreakdown, "Cartesian chart needs A > 1e-8");
  const double A2 = s.A * s.A;
  const double a2 = s.alpha * s.alpha, b2 = s.beta * s.beta;
  const double g = p.g;
  CartesianChart d;
  d.A = 2.0 * g * p.a01() * s.alpha * s.beta * s.A;
  d.theta = -p.omega0 - g * (p.a00() * A2 + p.a01() * (3.0 * a2 + b2));
  const double base = p.omega1 + d.theta + g * p.a11() * (a2 + b2);
  d.alpha = (base + g * p.a01() * A2) * s.beta;
  d.beta = -(base + 3.0 * g * p.a01() * A2) * s.alpha;
  return d;
}

PolarChart vf_polar(const PolarChart& s, const ReducedParams& p) {
  const double g = p.g, a01 = p.a01();
  const double r02 = s.r0 * s.r0, r12 = s.r1 * s.r1;
  const double s2 = std::sin(2.0 * s.dtheta), c2 = std::cos(2.0 * s.dtheta);
  PolarChart d;
  d.r0 = g * a01 * r12 * s.r0 * s2;
  d.r1 = -g * a01 * r02 * s.r1 * s2;
  const double th0 = -p.omega0 - g * (p.a00() * r02 + 2.0 * a01 * r12 + a01 * r12 * c2);
  const double th1 = -p.omega1 - g * (p.a11() * r12 + 2.0 * a01 * r02 + a01 * r02 * c2);
  d.theta0 = th0;
  d.dtheta = th1 - th0;
  return d;
}

EpsilonState vf_polar_reduced(const EpsilonState& s, double n, const ReducedParams& p) {
  const double N = p.n_cr() + n;
  const double g = p.g, a01 = p.a01();
  const double r12 = s.epsilon1 * s.epsilon1;
  const double r02 = N - r12;
  const double s2 = std::sin(2.0 * s.dtheta), c2 = std::cos(2.0 * s.dtheta);
  EpsilonState d;
  d.epsilon1 = -g * a01 * r02 * s.epsilon1 * s2;
  d.dtheta = -p.omega10() -
             g * (p.a11() * r12 - p.a00() * r02 + 2.0 * a01 * (r02 - r12) + a01 * (r02 - r12) * c2);
  return d;
}

double hamiltonian_cartesian(const CartesianChart& s, const ReducedParams& p) {
  const double A2 = s.A * s.A;
  const double a2 = s.alpha * s.alpha, b2 = s.beta * s.beta, q = a2 + b2;
  return p.omega0 * A2 + p.omega1 * q +
         0.5 * p.g *
             (p.a00() * A2 * A2 + p.a11() * q * q + 4.0 * p.a01() * A2 * q + 2.0 * p.a01() * A2 * (a2 - b2));
}

Invariants invariants(const ReducedState& s, const ReducedParams& p) {
  const ModeAmplitudes m = to_modes(s);
  const double n0 = std::norm(m.rho0), n1 = std::norm(m.rho1);
  const cplx cross = m.rho1 * m.rho1 * std::conj(m.rho0) * std::conj(m.rho0);
  Invariants out;
  out.N = n0 + n1;
  out.H = p.omega0 * n0 + p.omega1 * n1 +
          0.5 * p.g * (p.a00() * n0 * n0 + p.a11() * n1 * n1 + 4.0 * p.a01() * n0 * n1 + 2.0 * p.a01() * cross.real());
  return out;
}

ModeAmplitudes to_modes(const ReducedState& s) {
  if (const auto* m = std::get_if<ModeAmplitudes>(&s)) return *m;
  if (const auto* c = std::get_if<CartesianChart>(&s)) {
    const cplx ph = std::polar(1.0, c->theta);
    return {c->A * ph, cplx(c->alpha, c->beta) * ph};
  }
  const auto& q = std::get<PolarChart>(s);
  if (q.r0 < 0.0 || q.r1 < 0.0) throw Error(ErrorKind::ChartBreakdown, "negative polar modulus");
  return {std::polar(q.r0, q.theta0), std::polar(q.r1, q.theta0 + q.dtheta)};
}

CartesianChart to_cartesian(const ReducedState& s) {
  if (const auto* c = std::get_if<CartesianChart>(&s)) return *c;
  if (const auto* q = std::get_if<PolarChart>(&s)) {
    if (q->r0 <= kChartFloor) throw Error(ErrorKind::ChartBreakdown, "Cartesian chart needs A > 1e-8");
    return {q->r0, q->r1 * std::cos(q->dtheta), q->r1 * std::sin(q->dtheta), q->theta0};
  }
  const auto& m = std::get<ModeAmplitudes>(s);
  const double A = std::abs(m.rho0);
  if (A <= kChartFloor) throw Error(ErrorKind::ChartBreakdown, "Cartesian chart needs A > 1e-8");
  const double theta = std::arg(m.rho0);
  const cplx z = m.rho1 * std::conj(m.rho0) / A;
  return {A, z.real(), z.imag(), theta};
}

PolarChart to_polar(const ReducedState& s) {
  if (const auto* q = std::get_if<PolarChart>(&s)) return *q;
  if (const auto* c = std::get_if<CartesianChart>(&s)) {
    if (c->A < 0.0) throw Error(ErrorKind::ChartBreakdown, "negative amplitude A");
    return {c->A, std::hypot(c->alpha, c->beta), std::atan2(c->beta, c->alpha), c->theta};
  }
  const auto& m = std::get<ModeAmplitudes>(s);
  const double th0 = std::arg(m.rho0);
  return {std::abs(m.rho0), std::abs(m.rho1), wrap_angle(std::arg(m.rho1) - th0), th0};
}

ReducedState convert(const ReducedState& s, Chart to) {
  switch (to) {
    case Chart::Modes: return to_modes(s);
    case Chart::Cartesian: return to_cartesian(s);
    case Chart::Polar: return to_polar(s);
  }
  return s;
}

Chart chart_of(const ReducedState& s) {
  if (std::holds_alternative<ModeAmplitudes>(s)) return Chart::Modes;
  if (std::holds_alternative<CartesianChart>(s)) return Chart::Cartesian;
  return Chart::Polar;
}

double recover_epsilon0(double epsilon1, double n, double n_cr) {
  const double rhs = n - epsilon1 * epsilon1;
  const double disc = n_cr + rhs;
  if (disc < 0.0) throw Error(ErrorKind::InvalidArgument, "epsilon1 exceeds the available power");
  // -sqrt(n_cr) + sqrt(n_cr + rhs), written without cancellation
  return rhs / (std::sqrt(n_cr) + std::sqrt(disc));
}

EpsilonState to_epsilon(const PolarChart& s) { return {s.r1, s.dtheta}; }

PolarChart from_epsilon(const EpsilonState& s, double N, double theta0) {
  const double r02 = N - s.epsilon1 * s.epsilon1;
  if (r02 < 0.0 || s.epsilon1 < 0.0) throw Error(ErrorKind::InvalidArgument, "epsilon1 outside [0, sqrt(N)]");
  return {std::sqrt(r02), s.epsilon1, s.dtheta, theta0};
}

Packed pack(const ReducedState& s) {
  if (const auto* m = std::get_if<ModeAmplitudes>(&s))
    return {m->rho0.real(), m->rho0.imag(), m->rho1.real(), m->rho1.imag()};
  if (const auto* c = std::get_if<CartesianChart>(&s)) return {c->A, c->alpha, c->beta, c->theta};
  const auto& q = std::get<PolarChart>(s);
  return {q.r0, q.r1, q.dtheta, q.theta0};
}

ReducedState unpack(Chart chart, const Packed& y) {
  switch (chart) {
    case Chart::Modes: return ModeAmplitudes{cplx(y[0], y[1]), cplx(y[2], y[3])};
    case Chart::Cartesian: return CartesianChart{y[0], y[1], y[2], y[3]};
    case Chart::Polar: return PolarChart{y[0], y[1], y[2], y[3]};
  }
  return ModeAmplitudes{};
}

ReducedState Trajectory::state(std::size_t i) const { return unpack(chart, states.at(i)); }

Packed vf_packed(Chart chart, const Packed& y, const ReducedParams& p) {
  switch (chart) {
    case Chart::Modes: {
      auto d = vf_modes({cplx(y[0], y[1]), cplx(y[2], y[3])}, p);
      return {d.rho0.real(), d.rho0.imag(), d.rho1.real(), d.rho1.imag()};
    }
    case Chart::Cartesian: {
      auto d = vf_cartesian({y[0], y[1], y[2], y[3]}, p);
      return {d.A, d.alpha, d.beta, d.theta};
    }
    case Chart::Polar: {
      auto d = vf_polar({y[0], y[1], y[2], y[3]}, p);
      return {d.r0, d.r1, d.dtheta, d.theta0};
    }
  }
  return {};
}

Packed implicit_midpoint_step(Chart chart, const Packed& y, double dt, const ReducedParams& p) {
  Packed k = vf_packed(chart, y, p);
  double scale = 0.0;
  for (double v : y) scale = std::max(scale, std::abs(v));
  scale = std::max(scale, 1e-300);
  double prev = INFINITY;
  for (int it = 0; it < 100; ++it) {
    Packed mid;
    for (int j = 0; j < 4; ++j) mid[j] = y[j] + 0.5 * dt * k[j];
    Packed next = vf_packed(chart, mid, p);
    double diff = 0.0;
    for (int j = 0; j < 4; ++j) diff = std::max(diff, std::abs(next[j] - k[j]));
    k = next;
    const double rel = diff * dt / scale;
    if (rel < 1e-17 || (rel < 1e-15 && rel >= prev)) break;
    if (it > 60 && rel < 1e-13) break;
    if (it == 99) throw Error(ErrorKind::StepFailure, "implicit midpoint fixed point did not converge");
    prev = rel;
  }
  Packed out;
  for (int j = 0; j < 4; ++j) out[j] = y[j] + dt * k[j];
  return out;
}

namespace {

void record(Trajectory& tr, double t, const Packed& y, const ReducedParams& p) {
  for (double v : y)
    if (!std::isfinite(v)) throw Error(ErrorKind::StepFailure, "non-finite reduced state");
  tr.times.push_back(t);
  tr.states.push_back(y);
  auto inv = invariants(unpack(tr.chart, y), p);
  tr.N.push_back(inv.N);
  tr.H.push_back(inv.H);
}

Trajectory integrate_in(Chart chart, const Packed& y0, const ReducedParams& p, double t_end, double dt,
                        const IntegrateOptions& opt) {
  Trajectory tr;
  tr.chart = chart;
  if (opt.method == Method::ImplicitMidpoint) {
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(t_end / dt)));
    const double h = t_end / static_cast<double>(steps);
    const std::size_t stride = std::max<std::size_t>(1, opt.record_every);
    tr.times.reserve(steps / stride + 2);
    Packed y = y0;
    record(tr, 0.0, y, p);
    for (std::size_t k = 1; k <= steps; ++k) {
      y = implicit_midpoint_step(chart, y, h, p);
      if (k % stride == 0 || k == steps) record(tr, static_cast<double>(k) * h, y, p);
    }
    return tr;
  }

  namespace odeint = boost::numeric::odeint;
  using stepper_t = odeint::runge_kutta_dopri5<Packed>;
  auto sys = [&](const Packed& x, Packed& dxdt, double) { dxdt = vf_packed(chart, x, p); };
  Packed y = y0;
  const auto samples = static_cast<std::size_t>(std::max(1.0, std::round(t_end / dt)));
  const double h = t_end / static_cast<double>(samples);
  try {
    auto stepper = odeint::make_dense_output(opt.tolerance, opt.tolerance, stepper_t());
    odeint::integrate_const(
        stepper, sys, y, 0.0, t_end + 0.5 * h, h,
        [&](const Packed& x, double t) { record(tr, t, x, p); }, odeint::max_step_checker(1000000));
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::StepFailure, std::string("adaptive step failure: ") + e.what());
  }
  return tr;
}

}  // namespace

Trajectory integrate(const ReducedState& s0, const ReducedParams& p, double t_end, double dt,
                     const IntegrateOptions& opt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt and t_end must be positive");
  const Chart chart = chart_of(s0);
  try {
    return integrate_in(chart, pack(s0), p, t_end, dt, opt);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::ChartBreakdown || chart != Chart::Cartesian) throw;
  }
  Trajectory tr = integrate_in(Chart::Modes, pack(to_modes(s0)), p, t_end, dt, opt);
  tr.fell_back_to_modes = true;
  return tr;
}

PeriodEstimate detect_period(const Trajectory& tr) {
  auto beta_of = [&](const Packed& y) {
    switch (tr.chart) {
      case Chart::Modes: return y[3] * y[0] - y[2] * y[1];  // Im(rho1 conj rho0), same zeros as beta
      case Chart::Cartesian: return y[2];
      case Chart::Polar: return y[1] * std::sin(y[2]);
    }
    return 0.0;
  };
  PeriodEstimate est;
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) {
    const double b0 = beta_of(tr.states[k]), b1 = beta_of(tr.states[k + 1]);
    const double h = tr.times[k + 1] - tr.times[k];
    if (b0 > 0.0 && b1 <= 0.0 && (b0 - b1) / h > 1e-12)
      est.crossings.push_back(tr.times[k] + h * b0 / (b0 - b1));
  }
  const std::size_t m = est.crossings.size();
  if (m < 2) throw Error(ErrorKind::NoCrossing, "fewer than two section crossings");
  // least-squares slope of crossing time against crossing index
  double kbar = 0.5 * static_cast<double>(m - 1), tbar = 0.0;
  for (double t : est.crossings) tbar += t;
  tbar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double dk = static_cast<double>(k) - kbar;
    sxx += dk * dk;
    sxy += dk * (est.crossings[k] - tbar);
  }
  est.period = sxy / sxx;
  if (m > 2) {
    double rss = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double r = est.crossings[k] - (tbar + est.period * (static_cast<double>(k) - kbar));
      rss += r * r;
    }
    est.uncertainty = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  }
  return est;
}

double linear_period_symmetric(double N, double n_cr) {
  if (!(N < n_cr)) throw Error(ErrorKind::SaddleCase, "symmetric state is a saddle for N >= n_cr");
  return std::numbers::pi / std::sqrt((n_cr - N) * n_cr);
}

double linear_period_asymmetric(double N, double n_cr) {
  if (!(N > n_cr)) throw Error(ErrorKind::BelowThreshold, "asymmetric states need N > n_cr");
  return std::numbers::pi / std::sqrt(N * N - n_cr * n_cr);
}

}  // namespace dwell

namespace dwell {

std::vector<PhaseOrbit> phase_plane_scan(double n, const ReducedParams& p, const std::vector<EpsilonState>& starts,
                                         const PhaseScanOptions& opt) {
  const double n_cr = p.n_cr();
  const double N = n_cr + n;
  if (!(N > 0.0)) throw Error(ErrorKind::InvalidArgument, "total power must be positive");
  if (!(opt.dt > 0.0) || opt.record_every == 0) throw Error(ErrorKind::InvalidArgument, "bad step settings");
  double t_end = opt.t_end;
  if (!(t_end > 0.0)) {
    // unit-coefficient periods, rescaled by the frequency unit of the tensor
    const double scale = p.g * (p.a00() - 3.0 * p.a01()) / 2.0;
    const double T = n > 0.0 ? linear_period_asymmetric(N, n_cr) : linear_period_symmetric(N, n_cr);
    t_end = 4.0 * T / scale;
  }
  EpsilonState center = opt.center;
  if (center.epsilon1 == 0.0 && center.dtheta == 0.0 && n > 0.0) center.epsilon1 = std::sqrt(n / 2.0);

  std::vector<PhaseOrbit> out;
  out.reserve(starts.size());
  for (const auto& st : starts) {
    if (!(st.epsilon1 >= 0.0) || st.epsilon1 * st.epsilon1 >= N)
      throw Error(ErrorKind::InvalidArgument, "start needs 0 <= epsilon1 < sqrt(N)");
    IntegrateOptions io;
    io.record_every = opt.record_every;
    const Trajectory tr = integrate(from_epsilon(st, N), p, t_end, opt.dt, io);
    PhaseOrbit o;
    o.start = st;
    double prev = st.dtheta, unwrapped = st.dtheta;
    double lo = st.dtheta, hi = st.dtheta;
    double prev_angle = std::atan2(st.dtheta - center.dtheta, st.epsilon1 - center.epsilon1);
    o.epsilon1_min = o.epsilon1_max = st.epsilon1;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const PolarChart q = to_polar(tr.state(i));
      const double wrapped = q.dtheta;
      unwrapped += std::remainder(wrapped - prev, 2.0 * std::numbers::pi);
      prev = wrapped;
      o.times.push_back(tr.times[i]);
      o.epsilon1.push_back(q.r1);
      o.dtheta.push_back(unwrapped);
      o.epsilon1_min = std::min(o.epsilon1_min, q.r1);
      o.epsilon1_max = std::max(o.epsilon1_max, q.r1);
      lo = std::min(lo, unwrapped);
      hi = std::max(hi, unwrapped);
      const double a = std::atan2(unwrapped - center.dtheta, q.r1 - center.epsilon1);
      o.winding += std::remainder(a - prev_angle, 2.0 * std::numbers::pi);
      prev_angle = a;
    }
    o.dtheta_span = hi - lo;
    o.librating = o.dtheta_span < std::numbers::pi;
    out.push_back(std::move(o));
  }
  return out;
}

}  // namespace dwell
