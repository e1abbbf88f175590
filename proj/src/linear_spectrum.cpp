#include "dwell/linear_spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/tools/roots.hpp>

#include "dwell/tridiag.hpp"

namespace dwell {

namespace {

constexpr double kBoundaryTail = 1e-12;
constexpr double kDecayLengths = 10.0;

double interior_lower_bound(const Potential& p) {
  double m = 0.0;
  for (std::size_t i = 1; i < p.diagonal.size(); ++i) m = std::min(m, p.diagonal[i]);
  return m;
}

void project_parity(std::vector<double>& x, const Grid& grid, bool even) {
  const std::size_t n = grid.size();
  x[0] = 0.0;
  for (std::size_t i = 1; i < n / 2; ++i) {
    double a = x[i], b = x[grid.mirror(i)];
    double v = even ? 0.5 * (a + b) : 0.5 * (a - b);
    x[i] = v;
    x[grid.mirror(i)] = even ? v : -v;
  }
  if (!even) x[n / 2] = 0.0;
}

void normalize(std::vector<double>& x, const Grid& grid) {
  double nrm = std::sqrt(inner(grid, x, x));
  for (double& v : x) v /= nrm;
}

}  // namespace

double PotentialSpec::well_offset() const {
  if (kind == WellKind::Free) return 0.0;
  return kind == WellKind::DoubleDelta ? 0.5 * separation : separation;
}

double PotentialSpec::decay_length() const {
  if (kind == WellKind::Free) return 0.0;
  return kind == WellKind::DoubleDelta ? 2.0 / strength : strength;
}

double PotentialSpec::evaluate(double x) const {
  if (kind != WellKind::DoubleGaussian) return 0.0;
  const double s2 = strength * strength;
  const double c = 1.0 / std::sqrt(4.0 * std::numbers::pi * s2);
  const double L = separation;
  return -c * (std::exp(-(x - L) * (x - L) / (4.0 * s2)) + std::exp(-(x + L) * (x + L) / (4.0 * s2)));
}

Potential free_potential(const Grid& grid) {
  Potential p;
  p.spec = {WellKind::Free, 0.0, 0.0};
  p.grid = grid;
  p.samples.assign(grid.size(), 0.0);
  p.diagonal = p.samples;
  return p;
}

Potential build_potential(const PotentialSpec& spec, const Grid& grid) {
  if (spec.kind == WellKind::Free) return free_potential(grid);
  if (!(spec.strength > 0.0) || !(spec.separation > 0.0))
    throw Error(ErrorKind::InvalidArgument, "well strength and separation must be positive");
  const double edge = grid.x_max() - spec.well_offset();
  if (edge < kDecayLengths * spec.decay_length())
    throw Error(ErrorKind::DomainTooSmall, "wells closer than ten decay lengths to the boundary");

  Potential p;
  p.spec = spec;
  p.grid = grid;
  const std::size_t n = grid.size();
  p.samples.assign(n, 0.0);
  if (spec.kind == WellKind::DoubleGaussian) {
    // fill the right half and mirror so V(x_i) = V(-x_i) holds bitwise
    p.samples[n / 2] = spec.evaluate(0.0);
    for (std::size_t i = n / 2 + 1; i < n; ++i) {
      p.samples[i] = spec.evaluate(grid.x(i));
      p.samples[grid.mirror(i)] = p.samples[i];
    }
    p.samples[0] = spec.evaluate(grid.x_min());
    if (std::abs(p.samples[0]) > kBoundaryTail || std::abs(p.samples[1]) > kBoundaryTail)
      throw Error(ErrorKind::DomainTooSmall, "potential tail exceeds 1e-12 at the boundary");
    p.diagonal = p.samples;
  } else {
    p.delta = DeltaDescriptor{spec.well_offset(), spec.strength};
    p.diagonal = p.samples;
    const double pos = (spec.well_offset() - grid.x_min()) / grid.dx();
    double cell = std::floor(pos);
    double frac = pos - cell;
    if (frac > 1.0 - 1e-9) {
      cell += 1.0;
      frac = 0.0;
    }
    const auto j = static_cast<std::size_t>(cell);
    const double w = spec.strength / grid.dx();
    auto deposit = [&](std::size_t i, double amount) {
      p.diagonal[i] -= amount;
      p.diagonal[grid.mirror(i)] -= amount;
    };
    if (frac < 1e-9) {
      deposit(j, w);
    } else {
      deposit(j, w * (1.0 - frac));
      deposit(j + 1, w * frac);
    }
  }
  return p;
}

Grid default_grid(const PotentialSpec& spec, double x_max, std::size_t n_points) {
  if (spec.kind == WellKind::DoubleDelta) return Grid::aligned(x_max, n_points, spec.well_offset());
  return Grid(x_max, n_points);
}

DeltaLevels solve_double_delta_levels(double s, double L) {
  if (!(s > 0.0) || !(L > 0.0))
    throw Error(ErrorKind::InvalidArgument, "strength and separation must be positive");
  using boost::math::tools::eps_tolerance;
  using boost::math::tools::toms748_solve;
  const double h = 0.5 * s;

  auto f_even = [&](double k) { return k - h * (1.0 + std::exp(-k * L)); };
  std::uintmax_t iters = 200;
  auto even = toms748_solve(f_even, h, s, eps_tolerance<double>(52), iters);
  DeltaLevels out;
  out.kappa_even = 0.5 * (even.first + even.second);

  if (s * L <= 2.0) throw Error(ErrorKind::OddStateAbsent, "odd state absent: s*L <= 2");
  auto f_odd = [&](double k) { return k - h * (1.0 - std::exp(-k * L)); };
  // f_odd(0) = 0 with slope 1 - sL/2 < 0, so a small positive kappa is a negative bracket end.
  double lo = std::min(1e-3, 1e-3 * (s * L - 2.0)) / L;
  while (f_odd(lo) >= 0.0 && lo > 1e-300) lo *= 0.5;
  if (!(f_odd(lo) < 0.0)) throw Error(ErrorKind::OddStateAbsent, "odd state absent: no positive root");
  if (f_odd(h) <= 0.0) {
    out.kappa_odd = h;  // wells decoupled to machine precision
    return out;
  }
  iters = 200;
  auto odd = toms748_solve(f_odd, lo, h, eps_tolerance<double>(52), iters);
  out.kappa_odd = 0.5 * (odd.first + odd.second);
  return out;
}

RealField double_delta_mode(double s, double L, const Grid& grid, bool even) {
  const DeltaLevels lv = solve_double_delta_levels(s, L);
  const double k = even ? lv.kappa_even : *lv.kappa_odd;
  const double h = 0.5 * L;
  const double edge = even ? std::cosh(k * h) : std::sinh(k * h);
  const double inside = even ? (0.25 * L + std::sinh(k * L) / (4.0 * k)) : (std::sinh(k * L) / (4.0 * k) - 0.25 * L);
  const double norm = std::sqrt(2.0 * (inside / (edge * edge) + 0.5 / k));
  RealField out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double x = grid.x(i);
    double v;
    if (std::abs(x) <= h) v = (even ? std::cosh(k * x) : std::sinh(k * x)) / edge;
    else v = std::exp(-k * (std::abs(x) - h)) * ((even || x > 0.0) ? 1.0 : -1.0);
    out[i] = v / norm;
  }
  return out;
}

std::size_t count_below(const Potential& p, double lambda) {
  const std::size_t n = p.grid.size();
  const double inv = 1.0 / (p.grid.dx() * p.grid.dx());
  const double e2 = inv * inv;
  std::size_t count = 0;
  double q = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    double d = 2.0 * inv + p.diagonal[i] - lambda;
    q = (i == 1) ? d : d - e2 / q;
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++count;
  }
  return count;
}

void apply_h(const Potential& p, std::span<const double> u, std::span<double> out) {
  const std::size_t n = p.grid.size();
  const double inv = 1.0 / (p.grid.dx() * p.grid.dx());
  out[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    double right = (i + 1 < n) ? u[i + 1] : 0.0;
    out[i] = -(right - 2.0 * u[i] + u[i - 1]) * inv + p.diagonal[i] * u[i];
  }
}

void apply_h(const Potential& p, std::span<const cplx> u, std::span<cplx> out) {
  const std::size_t n = p.grid.size();
  const double inv = 1.0 / (p.grid.dx() * p.grid.dx());
  out[0] = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    cplx right = (i + 1 < n) ? u[i + 1] : cplx(0.0);
    out[i] = -(right - 2.0 * u[i] + u[i - 1]) * inv + p.diagonal[i] * u[i];
  }
}

std::vector<EigenPair> compute_eigenpairs(const Potential& p, int count) {
  if (count < 1 || count > 2) throw Error(ErrorKind::InvalidArgument, "eigenpair count must be 1 or 2");
  if (p.delta && p.spec.strength * p.spec.separation <= 2.0 && count == 2)
    throw Error(ErrorKind::OddStateAbsent, "odd state absent: s*L <= 2");
  const std::size_t bound = count_below(p, 0.0);
  if (bound < static_cast<std::size_t>(count))
    throw Error(ErrorKind::OddStateAbsent, "odd state absent: fewer than two bound states");

  const Grid& grid = p.grid;
  const std::size_t n = grid.size();
  const double inv = 1.0 / (grid.dx() * grid.dx());
  std::vector<EigenPair> pairs;

  for (int k = 0; k < count; ++k) {
    // Sturm bisection for the k-th eigenvalue
    double lo = interior_lower_bound(p) - 1e-12, hi = 0.0;
    for (int it = 0; it < 400 && hi - lo > 4e-16 * std::max(1.0, std::abs(lo)); ++it) {
      double mid = 0.5 * (lo + hi);
      if (count_below(p, mid) > static_cast<std::size_t>(k)) hi = mid;
      else lo = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    const bool even = (k == 0);

    // inverse iteration on interior nodes, restricted to one parity class
    const std::size_t m = n - 1;
    std::vector<double> sub(m, -inv), sup(m, -inv), diag(m), work;
    std::vector<double> x(n, 0.0), b(m), y(m);
    for (std::size_t i = 0; i < m; ++i) diag[i] = 2.0 * inv + p.diagonal[i + 1] - lambda;
    for (std::size_t i = 1; i < n; ++i) {
      double xi = grid.x(i);
      x[i] = even ? std::exp(-std::abs(xi) * 0.1) : std::tanh(xi) * std::exp(-std::abs(xi) * 0.1);
    }
    project_parity(x, grid, even);
    normalize(x, grid);
    bool converged = false;
    for (int it = 0; it < 50; ++it) {
      for (std::size_t i = 0; i < m; ++i) b[i] = x[i + 1];
      if (!solve_tridiagonal<double, double>(sub, diag, sup, b, y, work)) {
        diag[0] += 1e-14 * inv;  // exact pivot hit: nudge the shift
        continue;
      }
      std::vector<double> next(n, 0.0);
      for (std::size_t i = 0; i < m; ++i) next[i + 1] = y[i];
      project_parity(next, grid, even);
      normalize(next, grid);
      double dot = inner(grid, next, x);
      if (dot < 0.0)
        for (double& v : next) v = -v;
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(next[i] - x[i]));
      x.swap(next);
      if (change < 1e-13 * sup_norm(x)) {
        converged = true;
        break;
      }
    }
    if (!converged) throw Error(ErrorKind::ConvergenceFailure, "inverse iteration stagnated");

    std::vector<double> hx(n);
    apply_h(p, x, hx);
    const double rq = inner(grid, x, hx);
    double res2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) res2 += (hx[i] - rq * x[i]) * (hx[i] - rq * x[i]);
    if (std::sqrt(res2 * grid.dx()) > 1e-8)
      throw Error(ErrorKind::ConvergenceFailure, "eigen-residual above 1e-8");

    if (even) {
      double s = 0.0;
      for (double v : x) s += v;
      if (s < 0.0)
        for (double& v : x) v = -v;
    } else {
      double s = 0.0;
      for (std::size_t i = n / 2 + 1; i < n; ++i) s += x[i];
      if (s < 0.0)
        for (double& v : x) v = -v;
    }
    pairs.push_back({rq, std::move(x)});
  }
  if (count == 2 && !(pairs[0].eigenvalue <= pairs[1].eigenvalue && pairs[1].eigenvalue < 0.0))
    throw Error(ErrorKind::OddStateAbsent, "odd state is not bound");
  return pairs;
}

OverlapTensor OverlapTensor::unit() {
  OverlapTensor t;
  for (int idx = 0; idx < 16; ++idx) t.a[idx] = (__builtin_popcount(idx) % 2 == 0) ? 1.0 : 0.0;
  return t;
}

OverlapTensor overlap_coefficients(const Grid& grid, std::span<const double> psi0,
                                   std::span<const double> psi1) {
  require_same_size(grid, psi0.size(), "overlap_coefficients");
  require_same_size(grid, psi1.size(), "overlap_coefficients");
  // by symmetry only the number of psi1 factors matters
  std::array<double, 5> by_ones{};
  for (int ones = 0; ones <= 4; ++ones) {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double v = 1.0;
      for (int f = 0; f < 4; ++f) v *= (f < ones) ? psi1[i] : psi0[i];
      s += v;
    }
    by_ones[ones] = s * grid.dx();
  }
  OverlapTensor t;
  for (int idx = 0; idx < 16; ++idx) {
    int ones = __builtin_popcount(idx);
    t.a[idx] = (ones % 2 == 1) ? 0.0 : by_ones[ones];
  }
  return t;
}

CriticalPower critical_power(double omega10, const OverlapTensor& a, double g) {
  if (!(omega10 > 0.0)) throw Error(ErrorKind::InvalidArgument, "Omega10 must be positive");
  const double denom = g * (a(0, 0, 0, 0) - 3.0 * a(0, 0, 1, 1));
  if (!(denom > 1e-12 * std::abs(a(0, 0, 0, 0))))
    throw Error(ErrorKind::DegenerateDenominator, "coupling denominator a0000 - 3 a0011 vanishes or has the wrong sign");
  return {0.5 * omega10, omega10 / denom};
}

SpectralData compute_spectral_data(const Potential& potential, double g) {
  auto pairs = compute_eigenpairs(potential, 2);
  SpectralData d;
  d.potential = potential;
  d.g = g;
  d.omega0 = pairs[0].eigenvalue;
  d.omega1 = pairs[1].eigenvalue;
  d.omega10 = d.omega1 - d.omega0;
  d.psi0 = std::move(pairs[0]);
  d.psi1 = std::move(pairs[1]);
  d.a = overlap_coefficients(potential.grid, d.psi0.psi, d.psi1.psi);
  d.n_cr = critical_power(d.omega10, d.a, g);
  return d;
}

}  // namespace dwell
