#include "dwell/shadowing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include <boost/math/tools/roots.hpp>

#include "dwell/tridiag.hpp"

namespace dwell {

namespace {

double h1_norm(const Grid& grid, const ComplexField& w) {
  const std::size_t n = w.size();
  double l2 = 0.0, grad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    l2 += std::norm(w[i]);
    grad += std::norm(w[(i + 1) % n] - w[i]);
  }
  return std::sqrt(l2 * grid.dx() + grad / grid.dx());
}

// Crank-Nicolson for i R_t = (H + shift(t)) R + f(t) on the Dirichlet nodes 1..n-1.
class DrivenCrankNicolson {
 public:
  DrivenCrankNicolson(const Potential& p, double dt) : p_(&p), dt_(dt) {
    const std::size_t m = p.grid.size() - 1;
    sub_.assign(m, cplx(0.0, -0.5 * dt / (p.grid.dx() * p.grid.dx())));
    sup_ = sub_;
    diag_.resize(m);
    rhs_.resize(m);
    sol_.resize(m);
  }

  void step(ComplexField& r, double shift, const ComplexField& f) {
    const Grid& grid = p_->grid;
    const std::size_t n = grid.size();
    const double inv = 1.0 / (grid.dx() * grid.dx());
    const cplx half(0.0, 0.5 * dt_);
    r[0] = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const std::size_t i = j + 1;
      const double d = 2.0 * inv + p_->diagonal[i] + shift;
      diag_[j] = 1.0 + half * d;
      const cplx right = (i + 1 < n) ? r[i + 1] : cplx(0.0);
      const cplx hr = -(r[i - 1] + right) * inv + d * r[i];
      rhs_[j] = r[i] - half * hr - cplx(0.0, dt_) * f[i];
    }
    if (!solve_tridiagonal<cplx, cplx>(sub_, diag_, sup_, rhs_, sol_, work_))
      throw Error(ErrorKind::StepFailure, "zero pivot in the driven Crank-Nicolson solve");
    for (std::size_t j = 0; j + 1 < n; ++j) r[j + 1] = sol_[j];
  }

 private:
  const Potential* p_;
  double dt_;
  std::vector<cplx> sub_, sup_, diag_, rhs_, sol_, work_;
};

void check_orbit_spacing(const Trajectory& orbit, double dt) {
  if (orbit.size() < 3) throw Error(ErrorKind::InvalidArgument, "orbit needs at least one full step");
  const double h = orbit.times[1] - orbit.times[0];
  if (std::abs(h - 0.5 * dt) > 1e-9 * dt)
    throw Error(ErrorKind::InvalidArgument, "orbit must be sampled at half the PDE step");
}

double point_segment(double px, double py, double ax, double ay, double bx, double by) {
  const double vx = bx - ax, vy = by - ay;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - ax - t * vx, py - ay - t * vy);
}

// the zero state has no Cartesian chart; its source vanishes and the shift is the A -> 0 limit
bool is_zero_state(const ReducedState& s) {
  const auto* m = std::get_if<ModeAmplitudes>(&s);
  return m && m->rho0 == 0.0 && m->rho1 == 0.0;
}

}  // namespace

ProjectionResult project(const FieldState& u, const SpectralData& spectral) {
  const Grid& grid = spectral.grid();
  if (!(u.grid == grid)) throw Error(ErrorKind::GridMismatch, "field and eigenfunctions live on different grids");
  require_same_size(grid, u.values.size(), "projected field");
  const auto& p0 = spectral.psi0.psi;
  const auto& p1 = spectral.psi1.psi;
  ProjectionResult out;
  out.c0 = project_onto(grid, p0, u.values);
  out.c1 = project_onto(grid, p1, u.values);
  out.R = u;
  for (std::size_t i = 0; i < u.values.size(); ++i) out.R.values[i] -= out.c0 * p0[i] + out.c1 * p1[i];
  out.defect = std::abs(project_onto(grid, p0, out.R.values)) + std::abs(project_onto(grid, p1, out.R.values));
  return out;
}

CartesianChart to_moving_frame(cplx c0, cplx c1) {
  const double A = std::abs(c0);
  if (A <= 1e-8) throw Error(ErrorKind::ChartBreakdown, "|c0| too small for the moving frame");
  const double theta = std::arg(c0);
  const cplx z = c1 * std::polar(1.0, -theta);
  return {A, z.real(), z.imag(), theta};
}

FieldState build_initial_data(const CartesianChart& s, const SpectralData& spectral) {
  const Grid& grid = spectral.grid();
  const cplx rot = std::polar(1.0, s.theta);
  const cplx a = rot * s.A;
  const cplx b = rot * cplx(s.alpha, s.beta);
  FieldState u{grid, ComplexField(grid.size()), 0.0};
  for (std::size_t i = 0; i < grid.size(); ++i) u.values[i] = a * spectral.psi0.psi[i] + b * spectral.psi1.psi[i];
  return u;
}

ComplexField projected_source(const CartesianChart& s, const SpectralData& spectral) {
  const Grid& grid = spectral.grid();
  const auto& p0 = spectral.psi0.psi;
  const auto& p1 = spectral.psi1.psi;
  const cplx z(s.alpha, s.beta);
  ComplexField f(grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const cplx v = s.A * p0[i] + z * p1[i];
    f[i] = spectral.g * std::norm(v) * v;
  }
  const cplx f0 = project_onto(grid, p0, f);
  const cplx f1 = project_onto(grid, p1, f);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] -= f0 * p0[i] + f1 * p1[i];
  return f;
}

TildeRResult tilde_r_evolve(const Trajectory& orbit, const SpectralData& spectral, double dt, std::size_t stride) {
  check_orbit_spacing(orbit, dt);
  const Grid& grid = spectral.grid();
  const ReducedParams p = ReducedParams::tensor(spectral);
  const std::size_t steps = (orbit.size() - 1) / 2;
  stride = std::max<std::size_t>(stride, 1);

  TildeRResult out;
  FieldState r{grid, ComplexField(grid.size()), orbit.times[0]};
  out.series.push_back(r);
  DrivenCrankNicolson cn(spectral.potential, dt);
  for (std::size_t k = 0; k < steps; ++k) {
    const ReducedState st = orbit.state(2 * k + 1);
    if (is_zero_state(st)) {
      cn.step(r.values, -p.omega0, ComplexField(grid.size()));
      r.time = orbit.times[2 * k + 2];
      out.sup_norm = std::max(out.sup_norm, sup_norm(r.values));
      if ((k + 1) % stride == 0 || k + 1 == steps) out.series.push_back(r);
      continue;
    }
    const CartesianChart mid = to_cartesian(st);
    const ComplexField f = projected_source(mid, spectral);
    const double d = std::abs(project_onto(grid, spectral.psi0.psi, f)) +
                     std::abs(project_onto(grid, spectral.psi1.psi, f));
    out.projection_defect = std::max(out.projection_defect, d);
    cn.step(r.values, vf_cartesian(mid, p).theta, f);
    r.time = orbit.times[2 * k + 2];
    out.sup_norm = std::max(out.sup_norm, sup_norm(r.values));
    if ((k + 1) % stride == 0 || k + 1 == steps) out.series.push_back(r);
  }
  return out;
}

CouplingErrors coupling_errors(double A, double alpha, double beta, const FieldState& R, const SpectralData& spectral) {
  if (!(A > 1e-8)) throw Error(ErrorKind::ChartBreakdown, "coupling functionals need A > 1e-8");
  const Grid& grid = spectral.grid();
  require_same_size(grid, R.values.size(), "coupling residual");
  const auto& p0 = spectral.psi0.psi;
  const auto& p1 = spectral.psi1.psi;
  const std::size_t n = grid.size();
  const cplx z(alpha, beta), zc(alpha, -beta);
  const double r2 = alpha * alpha + beta * beta;

  cplx g0 = 0.0, g1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = p0[i], b = p1[i];
    const cplx r = R.values[i];
    const cplx rb = std::conj(r);
    const cplx rr = r * r;
    const double m = std::norm(r);
    // -<[...], R> - <[...], R bar> - [A <.., R^2> + zc <.., R^2>] - [2A <.., |R|^2> + 2z <.., |R|^2>] + <psi, |R|^2 R>
    g0 += -(2.0 * A * A * a * a * a + 4.0 * A * alpha * a * a * b + 2.0 * r2 * b * b * a) * r
          - (A * A * a * a * a + z * z * b * b * a + 2.0 * A * z * a * a * b) * rb
          - (A * a * a * rr + zc * a * b * rr)
          - (2.0 * A * a * a * m + 2.0 * z * a * b * m)
          + a * m * r;
    g1 += -(2.0 * A * A * a * a * b + 4.0 * A * alpha * a * b * b + 2.0 * r2 * b * b * b) * r
          - (A * A * a * a * b + z * z * b * b * b + 2.0 * A * z * a * b * b) * rb
          - (A * a * b * rr + zc * b * b * rr)
          - (2.0 * A * a * b * m + 2.0 * z * b * b * m)
          + b * m * r;
  }
  g0 *= grid.dx();
  g1 *= grid.dx();
  CouplingErrors e;
  e.error_A = g0.imag();
  e.error_alpha = g1.imag() - beta / A * g0.real();
  e.error_beta = -g1.real() - alpha / A * g0.real();
  e.error_theta = -g0.real() / A;
  return e;
}

StrichartzNorms strichartz_monitor(const std::vector<FieldState>& w, double sample_dt) {
  StrichartzNorms out;
  if (w.empty()) return out;
  double integral = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    out.h1_sup = std::max(out.h1_sup, h1_norm(w[k].grid, w[k].values));
    const double s = sup_norm(w[k].values);
    const double weight = (k == 0 || k + 1 == w.size()) ? 0.5 : 1.0;
    integral += weight * s * s * s * s;
  }
  out.l4_linf = std::pow(integral * sample_dt, 0.25);
  return out;
}

const char* to_string(Side s) noexcept { return s == Side::Above ? "above" : "below"; }

void ShadowParams::validate() const {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau must be positive");
  if (gamma && !(*gamma > 7.0 / 9.0 && *gamma < 1.0))
    throw Error(ErrorKind::InvalidArgument, "gamma must lie in (7/9, 1)");
  if (!(delta1 > 0.0) || !(delta > 0.0) || !(epsilon > 0.0))
    throw Error(ErrorKind::InvalidArgument, "exponents must be positive");
  if (!(periods > 0.0)) throw Error(ErrorKind::InvalidArgument, "periods must be positive");
  if (!(verdict_constant > 0.0) || !(annulus_limit > 0.0))
    throw Error(ErrorKind::InvalidArgument, "verdict thresholds must be positive");
}

CartesianChart orbit_start(const OrbitSpec& spec, double N, const ReducedParams& p, const ShadowParams& sp) {
  CartesianChart s;
  s.theta = spec.theta0;
  if (spec.epsilon1) {
    const double r1 = *spec.epsilon1;
    if (!(r1 >= 0.0) || r1 * r1 >= N) throw Error(ErrorKind::InvalidArgument, "epsilon1 must satisfy 0 <= eps1^2 < N");
    s.alpha = r1 * std::cos(spec.dtheta);
    s.beta = r1 * std::sin(spec.dtheta);
    s.A = std::sqrt(N - r1 * r1);
    return s;
  }
  const auto eqs = equilibria(N, p);
  if (spec.side == Side::Above) {
    if (eqs.size() < 2) throw Error(ErrorKind::InvalidArgument, "no asymmetric equilibrium at this power");
    const Equilibrium& eq = eqs[1];
    // toward the symmetric state; outward offsets of this size run along the separatrix
    const double amp = spec.amplitude.value_or(-0.3 * std::sqrt(sp.tau));
    s.alpha = eq.alpha + amp;
  } else {
    const double amp = spec.amplitude.value_or(std::pow(sp.tau, 0.5 * (1.0 + sp.delta)));
    s.alpha = amp;
  }
  if (s.alpha * s.alpha >= N) throw Error(ErrorKind::InvalidArgument, "orbit offset exceeds the available power");
  s.A = std::sqrt(N - s.alpha * s.alpha);
  return s;
}

ShadowReport run_shadow_experiment(const ShadowParams& params, const SpectralData& spectral, const OrbitSpec& orbit,
                                   const ShadowOptions& opt) {
  params.validate();
  if (!(opt.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  const ReducedParams p = ReducedParams::tensor(spectral);
  const Grid& grid = spectral.grid();

  ShadowReport rep;
  rep.n_cr = p.n_cr();
  rep.tau = params.tau;
  rep.n = orbit.side == Side::Above ? rep.n_cr + params.tau : rep.n_cr - params.tau;
  if (!(rep.n > 0.0)) throw Error(ErrorKind::InvalidArgument, "tau exceeds the critical power on the lower side");
  rep.start = orbit_start(orbit, rep.n, p, params);
  rep.amplitude = orbit.epsilon1 ? *orbit.epsilon1 : std::abs(rep.start.alpha - (orbit.side == Side::Above ? equilibria(rep.n, p)[1].alpha : 0.0));

  // period of the reference orbit
  const double h = 0.5 * opt.dt;
  double guess;
  {
    const auto eqs = equilibria(rep.n, p);
    const Equilibrium& center = orbit.side == Side::Above && eqs.size() > 1 ? eqs[1] : eqs[0];
    const auto lin = linearize(center, p);
    guess = lin.lambda_squared < 0.0 ? 2.0 * std::numbers::pi / std::sqrt(-lin.lambda_squared) : 100.0;
  }
  double window = 3.0 * guess;
  PeriodEstimate pe;
  for (int attempt = 0;; ++attempt) {
    try {
      auto probe = integrate(rep.start, p, window, h);
      pe = detect_period(probe);
      if (pe.crossings.size() >= 2) break;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoCrossing || attempt >= 6) throw;
    }
    window *= 2.0;
  }
  rep.period = pe.period;
  const double span = std::max(params.periods, std::pow(params.tau, -params.epsilon)) * rep.period;
  const std::size_t steps = static_cast<std::size_t>(std::ceil(span / opt.dt));
  rep.horizon = static_cast<double>(steps) * opt.dt;
  const std::size_t stride = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(rep.period / (opt.dt * static_cast<double>(opt.samples_per_period)))));

  const Trajectory ref = integrate(rep.start, p, rep.horizon, h);
  if (ref.size() != 2 * steps + 1) throw Error(ErrorKind::StepFailure, "reference orbit has an unexpected length");

  FieldState u = build_initial_data(rep.start, spectral);
  FieldState rt{grid, ComplexField(grid.size()), 0.0};
  // evolve e^{i Omega0 t} u: same A, alpha, beta, but CN no longer sees the fast phase
  Potential frame = spectral.potential;
  for (double& v : frame.diagonal) v -= spectral.omega0;
  CrankNicolsonStepper pde(frame, opt.dt, spectral.g, true);
  DrivenCrankNicolson driven(spectral.potential, opt.dt);

  const double n0 = mass(grid, u.values);
  const double h0 = hamiltonian(u, spectral.potential, spectral.g);
  double l4_integral = 0.0;
  double prev_w4 = -1.0;
  double last_sign = 0.0;
  std::vector<double> ref_alpha, ref_beta;
  for (std::size_t j = 0; j < ref.size(); j += std::max<std::size_t>(1, stride / 4)) {
    const auto c = to_cartesian(ref.state(j));
    ref_alpha.push_back(c.alpha);
    ref_beta.push_back(c.beta);
  }

  auto sample = [&](std::size_t k) {
    const double t = static_cast<double>(k) * opt.dt;
    const auto pr = project(u, spectral);
    const double parseval = std::abs(mass(grid, u.values) - std::norm(pr.c0) - std::norm(pr.c1) - mass(grid, pr.R.values));
    rep.projection_defect = std::max({rep.projection_defect, pr.defect, parseval});
    const CartesianChart m = to_moving_frame(pr.c0, pr.c1);
    const CartesianChart r = to_cartesian(ref.state(2 * k));
    rep.times.push_back(t);
    rep.eta_A.push_back(m.A - r.A);
    rep.eta_alpha.push_back(m.alpha - r.alpha);
    rep.eta_beta.push_back(m.beta - r.beta);
    rep.alpha_pde.push_back(m.alpha);
    rep.beta_pde.push_back(m.beta);
    rep.alpha_ref.push_back(r.alpha);
    rep.beta_ref.push_back(r.beta);
    const double eta = std::sqrt(rep.eta_A.back() * rep.eta_A.back() + rep.eta_alpha.back() * rep.eta_alpha.back() +
                                 rep.eta_beta.back() * rep.eta_beta.back());
    if (k == 0) rep.eta0 = eta;
    rep.sup_eta = std::max(rep.sup_eta, eta);

    const cplx unrot = std::polar(1.0, -m.theta);
    ComplexField w(grid.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = unrot * pr.R.values[i] - rt.values[i];
    const double ws = sup_norm(w);
    rep.w_sup.push_back(ws);
    rep.w_norms.h1_sup = std::max(rep.w_norms.h1_sup, h1_norm(grid, w));
    const double w4 = ws * ws * ws * ws;
    if (prev_w4 >= 0.0) l4_integral += 0.5 * (prev_w4 + w4) * (t - rep.times[rep.times.size() - 2]);
    prev_w4 = w4;
    const double rs = sup_norm(rt.values);
    rep.tilde_r_sup_series.push_back(rs);

    const auto d = diagnostics(u, spectral.potential, spectral.g);
    rep.mass.push_back(d.mass);
    rep.hamiltonian.push_back(d.hamiltonian);
    rep.center_of_mass.push_back(d.center_of_mass);
    rep.mass_drift = std::max(rep.mass_drift, std::abs(d.mass - n0));
    rep.h_drift = std::max(rep.h_drift, std::abs(d.hamiltonian - h0));
    const double tol = 1e-12 * std::max(1.0, grid.x_max());
    if (std::abs(d.center_of_mass) > tol) {
      const double sgn = d.center_of_mass > 0.0 ? 1.0 : -1.0;
      if (last_sign != 0.0 && sgn != last_sign) ++rep.com_sign_changes;
      last_sign = sgn;
    }
  };

  sample(0);
  for (std::size_t k = 0; k < steps; ++k) {
    try {
      pde.step(u.values);
      const CartesianChart mid = to_cartesian(ref.state(2 * k + 1));
      const ComplexField f = projected_source(mid, spectral);
      rep.source_defect = std::max(rep.source_defect, std::abs(project_onto(grid, spectral.psi0.psi, f)) +
                                                          std::abs(project_onto(grid, spectral.psi1.psi, f)));
      driven.step(rt.values, vf_cartesian(mid, p).theta, f);
      rep.tilde_r_sup = std::max(rep.tilde_r_sup, sup_norm(rt.values));
      u.time = static_cast<double>(k + 1) * opt.dt;
      if ((k + 1) % stride == 0 || k + 1 == steps) sample(k + 1);
    } catch (const Error& e) {
      rep.truncated = true;
      rep.truncation_reason = e.what();
      if (opt.strict) throw Error(ErrorKind::HorizonTruncated, std::string("PDE run stopped early: ") + e.what());
      break;
    }
  }
  rep.w_norms.l4_linf = std::pow(l4_integral, 0.25);

  // annulus around the reference curve
  double cx = 0.0, cy = 0.0;
  for (std::size_t j = 0; j < ref_alpha.size(); ++j) {
    cx += ref_alpha[j];
    cy += ref_beta[j];
  }
  cx /= static_cast<double>(ref_alpha.size());
  cy /= static_cast<double>(ref_alpha.size());
  double radius = 0.0;
  for (std::size_t j = 0; j < ref_alpha.size(); ++j) radius += std::hypot(ref_alpha[j] - cx, ref_beta[j] - cy);
  radius /= static_cast<double>(ref_alpha.size());
  double far = 0.0;
  for (std::size_t k = 0; k < rep.alpha_pde.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j + 1 < ref_alpha.size(); ++j)
      best = std::min(best, point_segment(rep.alpha_pde[k], rep.beta_pde[k], ref_alpha[j], ref_beta[j],
                                          ref_alpha[j + 1], ref_beta[j + 1]));
    far = std::max(far, best);
  }
  rep.annulus_width = radius > 0.0 ? 2.0 * far / radius : std::numeric_limits<double>::infinity();
  rep.annulus_ok = rep.annulus_width <= params.annulus_limit;
  rep.eta_bound = params.verdict_constant * std::pow(params.tau, 0.5 + params.delta1);
  rep.eta_ok = rep.sup_eta <= rep.eta_bound;
  return rep;
}

double separation_for_critical_power(double target, double strength, double x_max, std::size_t n_points) {
  if (!(target > 0.0)) throw Error(ErrorKind::InvalidArgument, "target critical power must be positive");
  auto ncr = [&](double L) {
    PotentialSpec spec{WellKind::DoubleDelta, strength, L};
    Potential pot = build_potential(spec, default_grid(spec, x_max, n_points));
    return compute_spectral_data(pot).n_cr.general;
  };
  auto f = [&](double L) { return std::log(ncr(L) / target); };
  double lo = 2.0 / strength * 1.25;
  double hi = 2.0 * (x_max - 10.0 * 2.0 / strength);
  if (f(lo) < 0.0 || f(hi) > 0.0) throw Error(ErrorKind::InvalidArgument, "critical power out of reach for this box");
  std::uintmax_t iters = 100;
  auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(40), iters);
  return 0.5 * (r.first + r.second);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

LadderResult run_tau_ladder(const ShadowParams& base, const OrbitSpec& orbit, int rungs, const ShadowOptions& opt,
                            int jobs) {
  base.validate();
  if (!base.gamma) throw Error(ErrorKind::InvalidArgument, "the tau ladder needs gamma");
  if (rungs < 2) throw Error(ErrorKind::InvalidArgument, "a ladder needs at least two rungs");
  LadderResult out;
  out.points.resize(static_cast<std::size_t>(rungs));
  std::vector<std::exception_ptr> errors(out.points.size());

  auto run = [&](std::size_t k) {
    try {
      LadderPoint& pt = out.points[k];
      pt.tau = base.tau / std::pow(2.0, static_cast<double>(k));
      pt.n_cr = std::pow(pt.tau, *base.gamma);
      pt.separation = separation_for_critical_power(pt.n_cr);
      PotentialSpec spec{WellKind::DoubleDelta, 1.0, pt.separation};
      Potential pot = build_potential(spec, default_grid(spec));
      SpectralData data = compute_spectral_data(pot);
      ShadowParams sp = base;
      sp.tau = pt.tau;
      pt.report = run_shadow_experiment(sp, data, orbit, opt);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t start = 0; start < out.points.size(); start += width) {
    std::vector<std::thread> pool;
    for (std::size_t k = start; k < std::min(out.points.size(), start + width); ++k) {
      if (width == 1) run(k);
      else pool.emplace_back(run, k);
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> taus, eta, tr, wh, wl;
  for (const auto& p : out.points) {
    taus.push_back(p.tau);
    eta.push_back(p.report.sup_eta);
    tr.push_back(p.report.tilde_r_sup);
    wh.push_back(p.report.w_norms.h1_sup);
    wl.push_back(p.report.w_norms.l4_linf);
  }
  out.eta_slope = loglog_slope(taus, eta);
  out.tilde_r_slope = loglog_slope(taus, tr);
  out.w_h1_slope = loglog_slope(taus, wh);
  out.w_l4_slope = loglog_slope(taus, wl);
  out.monotone = true;
  for (std::size_t k = 1; k < eta.size(); ++k)
    if (!(eta[k] < eta[k - 1])) out.monotone = false;
  return out;
}

}  // namespace dwell
