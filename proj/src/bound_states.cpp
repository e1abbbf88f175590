#include "dwell/bound_states.hpp"

#include <algorithm>
#include <cmath>

#include "dwell/tridiag.hpp"

namespace dwell {

namespace {

bool is_even(const Grid& grid, std::span<const double> f) {
  double odd = 0.0, scale = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) {
    odd = std::max(odd, std::abs(f[i] - f[grid.mirror(i)]));
    scale = std::max(scale, std::abs(f[i]));
  }
  return odd <= 1e-14 * scale;
}

void symmetrize(const Grid& grid, std::vector<double>& f) {
  f[0] = 0.0;
  for (std::size_t i = 1; i < f.size() / 2; ++i) {
    const double v = 0.5 * (f[i] + f[grid.mirror(i)]);
    f[i] = v;
    f[grid.mirror(i)] = v;
  }
}

double asymmetry_of(const Grid& grid, std::span<const double> f) {
  // the origin node sits on the mirror line and contributes to neither side
  double right = 0.0, left = 0.0;
  const std::size_t mid = grid.size() / 2;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (i > mid) right += f[i] * f[i];
    else if (i < mid) left += f[i] * f[i];
  }
  return (right - left) * grid.dx();
}

double elliptic_residual(const Potential& p, std::span<const double> psi, double omega, double g) {
  std::vector<double> hp(psi.size());
  apply_h(p, psi, hp);
  double s = 0.0;
  for (std::size_t i = 1; i < psi.size(); ++i) {
    const double r = hp[i] + g * psi[i] * psi[i] * psi[i] - omega * psi[i];
    s += r * r;
  }
  return std::sqrt(s * p.grid.dx());
}

}  // namespace

const char* to_string(Branch b) noexcept {
  switch (b) {
    case Branch::Symmetric: return "symmetric";
    case Branch::AsymPlus: return "asym-plus";
    case Branch::AsymMinus: return "asym-minus";
  }
  return "unknown";
}

BoundState spectral_renormalize(const Potential& potential, double omega, std::span<const double> seed,
                                const RenormOptions& opt) {
  const Grid& grid = potential.grid;
  const std::size_t n = grid.size();
  require_same_size(grid, seed.size(), "seed profile");
  if (!(omega < 0.0)) throw Error(ErrorKind::InvalidArgument, "omega must lie below the continuous spectrum");
  if (!(opt.g < 0.0)) throw Error(ErrorKind::InvalidArgument, "spectral renormalization needs a focusing nonlinearity");
  if (!(opt.mixing > 0.0 && opt.mixing <= 1.0)) throw Error(ErrorKind::InvalidArgument, "mixing must lie in (0, 1]");
  if (sup_norm(seed) == 0.0) throw Error(ErrorKind::InvalidArgument, "seed profile is zero");
  const double c = -opt.g;
  const double inv = 1.0 / (grid.dx() * grid.dx());
  const bool even = is_even(grid, seed);

  // L = H - omega on nodes 1..n-1
  const std::size_t m = n - 1;
  std::vector<double> sub(m, -inv), sup(m, -inv), diag(m), rhs(m), sol(m), work;
  for (std::size_t j = 0; j < m; ++j) diag[j] = 2.0 * inv + potential.diagonal[j + 1] - omega;

  std::vector<double> psi(seed.begin(), seed.end()), lpsi(n), next(n);
  psi[0] = 0.0;
  if (even) symmetrize(grid, psi);
  const double seed_scale = sup_norm(psi);

  BoundState out;
  out.grid = grid;
  out.omega = omega;
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    apply_h(potential, psi, lpsi);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      num += psi[i] * (lpsi[i] - omega * psi[i]);
      den += c * psi[i] * psi[i] * psi[i] * psi[i];
      rhs[i - 1] = c * psi[i] * psi[i] * psi[i];
    }
    if (!(den > 0.0) || !std::isfinite(num)) throw Error(ErrorKind::IterationDiverged, "renormalization factor undefined");
    if (!(num > 0.0)) throw Error(ErrorKind::IterationDiverged, "renormalization factor is not positive");
    const double factor = std::pow(num / den, 1.5);
    if (!solve_tridiagonal<double, double>(sub, diag, sup, rhs, sol, work))
      throw Error(ErrorKind::IterationDiverged, "singular resolvent");

    next[0] = 0.0;
    double change = 0.0, scale = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
      next[i] = (1.0 - opt.mixing) * psi[i] + opt.mixing * factor * sol[i - 1];
      change = std::max(change, std::abs(next[i] - psi[i]));
      scale = std::max(scale, std::abs(next[i]));
    }
    if (even) symmetrize(grid, next);
    psi.swap(next);
    if (!std::isfinite(scale) || !std::isfinite(change))
      throw Error(ErrorKind::IterationDiverged, "non-finite iterate");
    if (scale < 1e-12 * seed_scale) throw Error(ErrorKind::ConvergedToZero, "iteration collapsed to the zero state");
    if (change <= opt.tol * scale) {
      const double res = elliptic_residual(potential, psi, omega, opt.g);
      const double nrm = std::sqrt(inner(grid, psi, psi));
      if (res <= 1e-8 * nrm || change == 0.0) {
        out.iterations = it;
        out.residual = res;
        break;
      }
    }
    if (it == opt.max_iter)
      throw Error(ErrorKind::IterationDiverged, "spectral renormalization did not converge");
  }

  // phase fix: positive at the maximum node
  std::size_t imax = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(psi[i]) > std::abs(psi[imax])) imax = i;
  if (psi[imax] < 0.0)
    for (double& v : psi) v = -v;
  out.n = inner(grid, psi, psi);
  out.asymmetry = asymmetry_of(grid, psi);
  out.profile.assign(psi.begin(), psi.end());
  return out;
}

RealField seed_profile(const Potential& potential, Branch branch) {
  if (branch == Branch::Symmetric) return compute_eigenpairs(potential, 1)[0].psi;
  auto pairs = compute_eigenpairs(potential, 2);
  const double sign = branch == Branch::AsymPlus ? 1.0 : -1.0;
  RealField s(pairs[0].psi.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = pairs[0].psi[i] + sign * 0.3 * pairs[1].psi[i];
  return s;
}

SolitonCurve continue_in_omega(const Potential& potential, double omega_start, double omega_end, double step,
                               const std::vector<Branch>& branches, const RenormOptions& opt) {
  if (!(step > 0.0) || !(omega_end < omega_start) || !(omega_start < 0.0))
    throw Error(ErrorKind::InvalidArgument, "continuation runs toward decreasing omega below the continuum");
  const std::size_t count = static_cast<std::size_t>(std::floor((omega_start - omega_end) / step + 1e-9)) + 1;

  SolitonCurve curve;
  const bool need_odd = std::any_of(branches.begin(), branches.end(), [](Branch b) { return b != Branch::Symmetric; });
  auto pairs = compute_eigenpairs(potential, need_odd ? 2 : 1);
  curve.omega0 = pairs[0].eigenvalue;
  if (!(omega_start < curve.omega0))
    throw Error(ErrorKind::InvalidArgument, "continuation must start below the linear ground state");

  for (Branch b : branches) {
    RealField seed = seed_profile(potential, b);
    const double sign = b == Branch::AsymMinus ? -1.0 : 1.0;
    for (std::size_t k = 0; k < count; ++k) {
      const double omega = omega_start - static_cast<double>(k) * step;
      BoundState st;
      try {
        st = spectral_renormalize(potential, omega, seed, opt);
      } catch (const Error& e) {
        if (k == 0) throw;
        throw Error(ErrorKind::BranchLost, std::string("branch ") + to_string(b) + " lost: " + e.what());
      }
      curve.points.push_back({st.omega, st.n, st.asymmetry, b});
      for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = st.profile[i].real();
      // keep an asymmetric kick in the seed until the branch has separated
      if (b != Branch::Symmetric && std::abs(st.asymmetry) < 1e-3 * st.n) {
        const double kick = sign * 0.3 * std::sqrt(st.n);
        for (std::size_t i = 0; i < seed.size(); ++i) seed[i] += kick * pairs[1].psi[i];
      }
      curve.states.push_back(std::move(st));
    }
  }
  return curve;
}

double asymmetry_floor(const SolitonCurve& curve) {
  double noise = 0.0, n_max = 0.0;
  for (const auto& p : curve.points) {
    n_max = std::max(n_max, p.n);
    if (p.branch == Branch::Symmetric) noise = std::max(noise, std::abs(p.asymmetry));
  }
  return std::max(10.0 * noise, 1e-5 * n_max);
}

namespace {

struct Bracket {
  const CurvePoint* last_sym = nullptr;
  const CurvePoint* first_asym = nullptr;
  const CurvePoint* second_asym = nullptr;
};

Bracket find_bracket(const SolitonCurve& curve, double floor) {
  Bracket b;
  for (Branch fam : {Branch::AsymPlus, Branch::AsymMinus}) {
    const CurvePoint* prev = nullptr;
    for (const auto& p : curve.points) {
      if (p.branch != fam) continue;
      if (std::abs(p.asymmetry) > floor) {
        if (!b.first_asym || p.n < b.first_asym->n) {
          b.first_asym = &p;
          b.last_sym = prev;
          b.second_asym = nullptr;
          for (const auto& q : curve.points)
            if (q.branch == fam && &q > &p) {
              b.second_asym = &q;
              break;
            }
        }
        break;
      }
      prev = &p;
    }
  }
  return b;
}

}  // namespace

Threshold detect_threshold(const SolitonCurve& curve) {
  const double floor = asymmetry_floor(curve);
  Bracket b = find_bracket(curve, floor);
  if (!b.first_asym) throw Error(ErrorKind::NoBifurcationFound, "no asymmetric state above the noise floor");
  Threshold t;
  t.noise_floor = floor;
  t.n_star = b.first_asym->n;
  t.omega_star = b.first_asym->omega;
  if (b.second_asym) {
    const double a1 = std::abs(b.first_asym->asymmetry), a2 = std::abs(b.second_asym->asymmetry);
    if (a2 != a1) {
      const double s = (b.second_asym->n - b.first_asym->n) / (a2 - a1);
      const double w = (b.second_asym->omega - b.first_asym->omega) / (a2 - a1);
      t.n_star = b.first_asym->n - s * a1;
      t.omega_star = b.first_asym->omega - w * a1;
    }
  }
  if (b.last_sym) {
    t.n_star = std::clamp(t.n_star, b.last_sym->n, b.first_asym->n);
    t.omega_star = std::clamp(t.omega_star, b.first_asym->omega, b.last_sym->omega);
  }
  return t;
}

Threshold detect_threshold(const SolitonCurve& curve, const Potential& potential, double omega_tol,
                           const RenormOptions& opt) {
  const double floor = asymmetry_floor(curve);
  Bracket b = find_bracket(curve, floor);
  if (!b.first_asym) throw Error(ErrorKind::NoBifurcationFound, "no asymmetric state above the noise floor");
  if (!b.last_sym) return detect_threshold(curve);

  double hi = b.last_sym->omega;   // symmetric side (larger omega)
  double lo = b.first_asym->omega; // asymmetric side
  const BoundState* asym_state = nullptr;
  for (std::size_t i = 0; i < curve.points.size(); ++i)
    if (&curve.points[i] == b.first_asym) asym_state = &curve.states[i];
  RealField seed(asym_state->profile.size());
  for (std::size_t i = 0; i < seed.size(); ++i) seed[i] = asym_state->profile[i].real();

  while (hi - lo > omega_tol) {
    const double mid = 0.5 * (lo + hi);
    bool asymmetric = false;
    try {
      BoundState st = spectral_renormalize(potential, mid, seed, opt);
      asymmetric = std::abs(st.asymmetry) > floor;
    } catch (const Error& e) {
      // critical slowing down right at the pitchfork; treat as not yet separated
      if (e.kind() != ErrorKind::IterationDiverged) throw;
    }
    if (asymmetric) lo = mid;
    else hi = mid;
  }
  Threshold t;
  t.noise_floor = floor;
  t.omega_star = 0.5 * (lo + hi);
  t.omega_bracket = hi - lo;
  RealField sym = seed_profile(potential, Branch::Symmetric);
  t.n_star = spectral_renormalize(potential, t.omega_star, sym, opt).n;
  return t;
}

}  // namespace dwell
