#include "dwell/pde_solver.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "dwell/tridiag.hpp"

namespace dwell {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct FftBuffer {
  std::size_t n = 0;
  fftw_complex* data = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit FftBuffer(std::size_t size) : n(size) {
    std::lock_guard lock(fftw_mutex());
    data = fftw_alloc_complex(n);
    const int len = static_cast<int>(n);
    forward = fftw_plan_dft_1d(len, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_1d(len, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~FftBuffer() {
    std::lock_guard lock(fftw_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(data);
  }
  FftBuffer(const FftBuffer&) = delete;
  FftBuffer& operator=(const FftBuffer&) = delete;

  cplx* values() { return reinterpret_cast<cplx*>(data); }
};

std::vector<double> wavenumbers(const Grid& grid) {
  const std::size_t n = grid.size();
  const double base = 2.0 * std::numbers::pi / (static_cast<double>(n) * grid.dx());
  std::vector<double> k(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double idx = m < n / 2 ? static_cast<double>(m) : static_cast<double>(m) - static_cast<double>(n);
    k[m] = base * idx;
  }
  return k;
}

void check_field(const Grid& grid, const Potential& potential, std::size_t n) {
  if (!(grid == potential.grid)) throw Error(ErrorKind::GridMismatch, "state and potential grids differ");
  require_same_size(grid, n, "field");
}

}  // namespace

const char* to_string(Scheme s) noexcept {
  return s == Scheme::SplitStepFourier ? "split-step" : "crank-nicolson";
}

struct SplitStepStepper::Impl {
  const Potential* potential;
  double dt, g;
  bool nonlinear;
  FftBuffer fft;
  std::vector<cplx> kinetic;

  Impl(const Potential& p, double dt_, double g_, bool nl)
      : potential(&p), dt(dt_), g(g_), nonlinear(nl), fft(p.grid.size()) {
    const auto k = wavenumbers(p.grid);
    const double scale = 1.0 / static_cast<double>(k.size());
    kinetic.resize(k.size());
    for (std::size_t m = 0; m < k.size(); ++m) kinetic[m] = std::polar(scale, -dt * k[m] * k[m]);
  }

  void half_potential(cplx* u) const {
    const auto& v = potential->diagonal;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double phase = v[i];
      if (nonlinear) phase += g * std::norm(u[i]);
      u[i] *= std::polar(1.0, -0.5 * dt * phase);
    }
  }
};

SplitStepStepper::SplitStepStepper(const Potential& potential, double dt, double g, bool nonlinear) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (!potential.smooth())
    throw Error(ErrorKind::InvalidArgument, "split-step needs a smooth potential; use crank-nicolson for delta wells");
  impl_ = std::make_unique<Impl>(potential, dt, g, nonlinear);
}

SplitStepStepper::~SplitStepStepper() = default;

void SplitStepStepper::step(ComplexField& u) {
  const std::size_t n = impl_->fft.n;
  require_same_size(impl_->potential->grid, u.size(), "split-step field");
  cplx* buf = impl_->fft.values();
  std::copy(u.begin(), u.end(), buf);
  impl_->half_potential(buf);
  fftw_execute(impl_->fft.forward);
  for (std::size_t m = 0; m < n; ++m) buf[m] *= impl_->kinetic[m];
  fftw_execute(impl_->fft.backward);
  impl_->half_potential(buf);
  std::copy(buf, buf + n, u.begin());
}

CrankNicolsonStepper::CrankNicolsonStepper(const Potential& potential, double dt, double g, bool nonlinear)
    : potential_(&potential), dt_(dt), g_(g), nonlinear_(nonlinear) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  const std::size_t m = potential.grid.size() - 1;
  rhs_.resize(m);
  next_.resize(m);
  prev_.resize(m);
  sub_.resize(m);
  diag_.resize(m);
  sup_.resize(m);
  w_.assign(m, 0.0);
}

void CrankNicolsonStepper::step(ComplexField& u) {
  constexpr int kMaxSweeps = 25;
  constexpr double kTol = 1e-12;
  const Grid& grid = potential_->grid;
  const std::size_t n = grid.size();
  require_same_size(grid, u.size(), "crank-nicolson field");
  const std::size_t m = n - 1;
  const double inv = 1.0 / (grid.dx() * grid.dx());
  const cplx half(0.0, 0.5 * dt_);
  const cplx off = -half * inv;

  // unknowns are nodes 1..n-1; node 0 and the periodic image of x_max are held at zero
  u[0] = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    sub_[j] = off;
    sup_[j] = off;
  }
  double scale = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    w_[j] = nonlinear_ ? g_ * std::norm(u[j + 1]) : 0.0;
    scale = std::max(scale, std::abs(u[j + 1]));
  }
  scale = std::max(scale, 1.0);

  const int sweeps_needed = nonlinear_ ? 2 : 1;
  for (int sweep = 1;; ++sweep) {
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t i = j + 1;
      const double h_diag = 2.0 * inv + potential_->diagonal[i] + w_[j];
      diag_[j] = 1.0 + half * h_diag;
      const cplx left = u[i - 1];
      const cplx right = (i + 1 < n) ? u[i + 1] : cplx(0.0);
      const cplx hu = -(left + right) * inv + h_diag * u[i];
      rhs_[j] = u[i] - half * hu;
    }
    std::swap(prev_, next_);
    if (!solve_tridiagonal<cplx, cplx>(sub_, diag_, sup_, rhs_, next_, work_))
      throw Error(ErrorKind::NonlinearIterationDiverged, "zero pivot in the Crank-Nicolson solve");
    if (!nonlinear_) {
      last_sweeps_ = 1;
      break;
    }
    double change = 0.0;
    if (sweep > 1)
      for (std::size_t j = 0; j < m; ++j) change = std::max(change, std::abs(next_[j] - prev_[j]));
    if (!std::isfinite(change)) throw Error(ErrorKind::NonlinearIterationDiverged, "non-finite iterate");
    if (sweep >= sweeps_needed && change <= kTol * scale) {
      last_sweeps_ = sweep;
      break;
    }
    if (sweep >= kMaxSweeps)
      throw Error(ErrorKind::NonlinearIterationDiverged, "fixed-point sweeps did not converge in 25 iterations");
    for (std::size_t j = 0; j < m; ++j) w_[j] = g_ * std::norm(0.5 * (u[j + 1] + next_[j]));
  }
  for (std::size_t j = 0; j < m; ++j) u[j + 1] = next_[j];
}

FieldState step_splitstep(const FieldState& state, double dt, const Potential& potential, double g,
                          bool nonlinear) {
  check_field(state.grid, potential, state.values.size());
  SplitStepStepper stepper(potential, dt, g, nonlinear);
  FieldState out = state;
  stepper.step(out.values);
  out.time += dt;
  return out;
}

FieldState step_crank_nicolson(const FieldState& state, double dt, const Potential& potential, double g,
                               bool nonlinear) {
  check_field(state.grid, potential, state.values.size());
  CrankNicolsonStepper stepper(potential, dt, g, nonlinear);
  FieldState out = state;
  stepper.step(out.values);
  out.time += dt;
  return out;
}

double hamiltonian(const FieldState& state, const Potential& potential, double g, Gradient gradient) {
  check_field(state.grid, potential, state.values.size());
  const Grid& grid = state.grid;
  const auto& u = state.values;
  const std::size_t n = grid.size();
  const double dx = grid.dx();

  double kinetic = 0.0;
  if (gradient == Gradient::Staggered) {
    for (std::size_t i = 0; i < n; ++i) kinetic += std::norm(u[(i + 1) % n] - u[i]);
    kinetic /= dx;
  } else {
    FftBuffer fft(n);
    std::copy(u.begin(), u.end(), fft.values());
    fftw_execute(fft.forward);
    const auto k = wavenumbers(grid);
    for (std::size_t m = 0; m < n; ++m) kinetic += k[m] * k[m] * std::norm(fft.values()[m]);
    kinetic *= dx / static_cast<double>(n);
  }
  double pot = 0.0, quartic = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::norm(u[i]);
    pot += potential.diagonal[i] * r;
    quartic += r * r;
  }
  return kinetic + dx * pot + 0.5 * g * dx * quartic;
}

PdeDiagnostics diagnostics(const FieldState& state, const Potential& potential, double g, Gradient gradient) {
  PdeDiagnostics d;
  d.time = state.time;
  d.mass = mass(state.grid, state.values);
  d.hamiltonian = hamiltonian(state, potential, g, gradient);
  double first = 0.0;
  for (std::size_t i = 0; i < state.values.size(); ++i) {
    const double a = std::abs(state.values[i]);
    first += state.grid.x(i) * a * a;
    if (a > d.max_amplitude) {
      d.max_amplitude = a;
      d.max_location = state.grid.x(i);
    }
  }
  first *= state.grid.dx();
  d.center_of_mass = d.mass > 0.0 ? first / d.mass : 0.0;
  return d;
}

double apply_tail_filter(FieldState& state, double radius) {
  double removed = 0.0;
  for (std::size_t i = 0; i < state.values.size(); ++i) {
    if (std::abs(state.grid.x(i)) > radius) {
      removed += std::norm(state.values[i]);
      state.values[i] = 0.0;
    }
  }
  return removed * state.grid.dx();
}

EvolveResult evolve(const FieldState& state0, const EvolveParams& params, const Potential& potential) {
  check_field(state0.grid, potential, state0.values.size());
  if (!(params.dt > 0.0) || !(params.t_end >= 0.0) || !std::isfinite(params.t_end))
    throw Error(ErrorKind::InvalidArgument, "dt must be positive and t_end nonnegative");
  if (params.tail_filter) {
    const auto& f = *params.tail_filter;
    if (!(f.cutoff_radius > 0.0) || f.cutoff_radius >= state0.grid.x_max() || f.trigger_step_count == 0)
      throw Error(ErrorKind::InvalidArgument, "tail filter radius must lie inside the domain");
  }
  for (const cplx& v : state0.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw Error(ErrorKind::InvalidArgument, "initial state is not finite");

  std::size_t steps = static_cast<std::size_t>(std::llround(params.t_end / params.dt));
  if (steps == 0 && params.t_end > 0.0) steps = 1;
  const double h = steps > 0 ? params.t_end / static_cast<double>(steps) : params.dt;
  const std::size_t record = std::max<std::size_t>(params.record_every, 1);
  const Gradient grad = params.scheme == Scheme::SplitStepFourier ? Gradient::Spectral : Gradient::Staggered;
  const double g = params.nonlinear ? params.g : 0.0;

  EvolveResult out;
  FieldState state = state0;
  const double t0 = state0.time;
  out.diagnostics.push_back(diagnostics(state, potential, g, grad));
  out.snapshots.push_back(state);

  std::optional<SplitStepStepper> ss;
  std::optional<CrankNicolsonStepper> cn;
  if (params.scheme == Scheme::SplitStepFourier) ss.emplace(potential, h, params.g, params.nonlinear);
  else cn.emplace(potential, h, params.g, params.nonlinear);

  for (std::size_t k = 1; k <= steps; ++k) {
    if (ss) ss->step(state.values);
    else cn->step(state.values);
    state.time = t0 + static_cast<double>(k) * h;
    if (params.tail_filter && k % params.tail_filter->trigger_step_count == 0) {
      out.removed_mass += apply_tail_filter(state, params.tail_filter->cutoff_radius);
      ++out.filter_events;
    }
    if (k % record == 0 || k == steps) out.diagnostics.push_back(diagnostics(state, potential, g, grad));
    if (params.snapshot_every > 0 && k % params.snapshot_every == 0 && k != steps) out.snapshots.push_back(state);
  }
  if (steps > 0) out.snapshots.push_back(state);
  out.steps = steps;
  out.final_state = std::move(state);
  return out;
}

}  // namespace dwell
