#include "dwell/bifurcation.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/MatrixFunctions>

namespace dwell {

namespace {

using Packed = std::array<double, 4>;

// matrix ordering (alpha, beta, A, theta) <-> packed Cartesian (A, alpha, beta, theta)
Eigen::Vector4d to_vec(const Packed& y) { return {y[1], y[2], y[0], y[3]}; }

CartesianChart from_vec(const Eigen::Vector4d& v) { return {v[2], v[0], v[1], v[3]}; }

Eigen::Vector4d field(const CartesianChart& s, const ReducedParams& p) {
  auto d = vf_cartesian(s, p);
  return {d.alpha, d.beta, d.A, d.theta};
}

template <int N>
std::array<std::complex<double>, N> sorted_eigs(const Eigen::Matrix<double, N, N>& m) {
  Eigen::EigenSolver<Eigen::Matrix<double, N, N>> es(m, false);
  std::array<std::complex<double>, N> out;
  for (int i = 0; i < N; ++i) out[i] = es.eigenvalues()[i];
  std::sort(out.begin(), out.end(), [](auto a, auto b) {
    return a.imag() != b.imag() ? a.imag() > b.imag() : a.real() > b.real();
  });
  return out;
}

double lambda_squared_of(const Eigen::Matrix3d& b) {
  // b has a zero eigenvalue and zero trace at an equilibrium, so the other two are
  // the roots of lambda^2 + c1 with c1 the sum of principal 2x2 minors.
  const double c1 = b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0) + b(0, 0) * b(2, 2) - b(0, 2) * b(2, 0) +
                    b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1);
  return -c1;
}

}  // namespace

const char* to_string(EquilibriumKind k) noexcept {
  switch (k) {
    case EquilibriumKind::Symmetric: return "symmetric";
    case EquilibriumKind::AsymmetricPlus: return "asymmetric_plus";
    case EquilibriumKind::AsymmetricMinus: return "asymmetric_minus";
  }
  return "unknown";
}

const char* to_string(Stability s) noexcept {
  switch (s) {
    case Stability::EllipticCenter: return "elliptic";
    case Stability::Saddle: return "saddle";
    case Stability::Degenerate: return "degenerate";
  }
  return "unknown";
}

std::vector<Equilibrium> equilibria(double N, const ReducedParams& p) {
  if (N < 0.0) throw Error(ErrorKind::InvalidArgument, "power must be nonnegative");
  const double nc = p.n_cr();
  const double g = p.g;
  std::vector<Equilibrium> out;
  out.push_back({EquilibriumKind::Symmetric, std::sqrt(N), 0.0, 0.0, p.omega0 + g * p.a00() * N, N});
  if (N < nc) return out;

  double A2, al2;
  if (p.mode == CoefficientMode::Unit) {
    A2 = 0.5 * (N + nc);
    al2 = 0.5 * (N - nc);
  } else {
    const double denom = -g * (p.a00() + p.a11() - 6.0 * p.a01());
    al2 = std::max(0.0, p.omega10() * (nc - N) / nc / denom);
    A2 = N - al2;
    if (A2 <= 0.0) return out;
  }
  const double A = std::sqrt(A2), al = std::sqrt(al2);
  const double rot = p.omega0 + g * (p.a00() * A2 + 3.0 * p.a01() * al2);
  out.push_back({EquilibriumKind::AsymmetricPlus, A, al, 0.0, rot, N});
  out.push_back({EquilibriumKind::AsymmetricMinus, A, -al, 0.0, rot, N});
  return out;
}

std::vector<Equilibrium> equilibria(double N, double n_cr) { return equilibria(N, ReducedParams::unit(n_cr)); }

Eigen::Matrix4d jacobian(const CartesianChart& s, const ReducedParams& p) {
  const double c = p.g * p.a01(), e0 = p.g * p.a00(), e1 = p.g * p.a11();
  const double A = s.A, al = s.alpha, be = s.beta;
  const double A2 = A * A, a2 = al * al, b2 = be * be;
  const double P = p.omega10() - e0 * A2 - c * (3 * a2 + b2) + e1 * (a2 + b2) + c * A2;
  const double Q = P + 2.0 * c * A2;
  Eigen::Matrix4d J = Eigen::Matrix4d::Zero();
  J.row(0) << 2 * al * (e1 - 3 * c) * be, P + 2 * b2 * (e1 - c), 2 * A * (c - e0) * be, 0;
  J.row(1) << -Q - 2 * a2 * (e1 - 3 * c), -2 * al * be * (e1 - c), -2 * al * A * (3 * c - e0), 0;
  J.row(2) << 2 * c * be * A, 2 * c * al * A, 2 * c * al * be, 0;
  J.row(3) << -6 * c * al, -2 * c * be, -2 * e0 * A, 0;
  return J;
}

Eigen::Matrix4d finite_difference_jacobian(const CartesianChart& s, const ReducedParams& p, double h) {
  if (h < 1e-7 || h > 1e-4) throw Error(ErrorKind::InvalidArgument, "difference step must lie in [1e-7, 1e-4]");
  Eigen::Matrix4d J;
  const Eigen::Vector4d x = to_vec(pack(s));
  for (int j = 0; j < 4; ++j) {
    Eigen::Vector4d xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    J.col(j) = (field(from_vec(xp), p) - field(from_vec(xm), p)) / (2.0 * h);
  }
  return J;
}

std::array<std::complex<double>, 2> closed_form_eigenvalues(EquilibriumKind kind, double N, double n_cr) {
  using C = std::complex<double>;
  if (kind == EquilibriumKind::Symmetric) {
    if (N < n_cr) {
      const double w = 2.0 * std::sqrt((n_cr - N) * n_cr);
      return {C(0, w), C(0, -w)};
    }
    const double r = 2.0 * std::sqrt((N - n_cr) * n_cr);
    return {C(r, 0), C(-r, 0)};
  }
  if (N < n_cr) throw Error(ErrorKind::InvalidEquilibrium, "asymmetric states need N >= n_cr");
  const double w = 2.0 * std::sqrt(N * N - n_cr * n_cr);
  return {C(0, w), C(0, -w)};
}

Stability classify(const Eigen::Matrix3d& b) {
  const double l2 = lambda_squared_of(b);
  if (l2 < 0.0) return Stability::EllipticCenter;
  if (l2 > 0.0) return Stability::Saddle;
  return Stability::Degenerate;
}

LinearizationReport linearize(const Equilibrium& eq, const ReducedParams& p) {
  const CartesianChart s = eq.state();
  const auto d = vf_cartesian(s, p);
  const double scale = std::max(1.0, std::abs(p.omega10()));
  if (std::abs(d.alpha) + std::abs(d.beta) + std::abs(d.A) > 1e-10 * scale ||
      std::abs(s.A * s.A + s.alpha * s.alpha + s.beta * s.beta - eq.n) > 1e-10 * std::max(1.0, eq.n))
    throw Error(ErrorKind::InvalidEquilibrium, "state is not an equilibrium at the stated power");

  LinearizationReport r;
  r.b_full = jacobian(s, p);
  r.b_reduced = r.b_full.topLeftCorner<3, 3>();
  r.lambda_squared = lambda_squared_of(r.b_reduced);
  r.classification = classify(r.b_reduced);
  using C = std::complex<double>;
  if (p.mode == CoefficientMode::Unit) {
    auto pair = closed_form_eigenvalues(eq.kind, eq.n, p.n_cr());
    r.eig_closed = {pair[0], pair[1], C(0.0)};
  } else {
    const C root = std::sqrt(C(r.lambda_squared, 0.0));
    r.eig_closed = {root, -root, C(0.0)};
  }
  std::sort(r.eig_closed.begin(), r.eig_closed.end(), [](auto a, auto b) {
    return a.imag() != b.imag() ? a.imag() > b.imag() : a.real() > b.real();
  });
  r.eig_numeric = sorted_eigs<3>(r.b_reduced);
  return r;
}

LinearizationReport linearize(const Equilibrium& eq, double n_cr) { return linearize(eq, ReducedParams::unit(n_cr)); }

double locate_stability_flip(double n_cr, double rel_tol) {
  const ReducedParams p = ReducedParams::unit(n_cr);
  auto stab = [&](double N) { return classify(linearize(equilibria(N, p).front(), p).b_reduced); };
  double lo = 0.5 * n_cr, hi = 2.0 * n_cr;
  if (stab(lo) != Stability::EllipticCenter || stab(hi) != Stability::Saddle)
    throw Error(ErrorKind::NoBifurcationFound, "symmetric branch does not change stability in [n_cr/2, 2 n_cr]");
  while (hi - lo > rel_tol * n_cr) {
    const double mid = 0.5 * (lo + hi);
    const Stability s = stab(mid);
    if (s == Stability::Degenerate) return mid;
    (s == Stability::EllipticCenter ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LinearFlow linear_flow(const Equilibrium& eq, const ReducedParams& p, double t, bool allow_numeric) {
  const LinearizationReport lin = linearize(eq, p);
  LinearFlow out;
  if (lin.classification != Stability::EllipticCenter) {
    if (!allow_numeric) throw Error(ErrorKind::SaddleCase, "closed-form propagator needs an elliptic equilibrium");
    out.propagator = (lin.b_full * t).exp();
    return out;
  }
  const Eigen::Matrix3d B = lin.b_reduced;
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  const double w = std::sqrt(-lin.lambda_squared);
  const Eigen::Matrix3d P0 = I + B * B / (w * w);
  const double c = std::cos(w * t), s = std::sin(w * t);
  const Eigen::Matrix3d E = P0 + (I - P0) * c + B * (s / w);
  const Eigen::Matrix3d integral = P0 * t + (I - P0) * (s / w) + B * ((1.0 - c) / (w * w));
  out.propagator.setZero();
  out.propagator.topLeftCorner<3, 3>() = E;
  out.propagator.block<1, 3>(3, 0) = lin.b_full.block<1, 3>(3, 0) * integral;
  out.propagator(3, 3) = 1.0;
  out.closed_form = true;
  return out;
}

namespace {

struct FlowResult {
  Packed end;
  Eigen::Matrix4d Phi;
};

FlowResult flow_with_tangent(const Packed& y0, double T, std::size_t K, const ReducedParams& p, bool tangent) {
  const double h = T / static_cast<double>(K);
  FlowResult r{y0, Eigen::Matrix4d::Identity()};
  const Eigen::Matrix4d I = Eigen::Matrix4d::Identity();
  for (std::size_t k = 0; k < K; ++k) {
    const Packed next = implicit_midpoint_step(Chart::Cartesian, r.end, h, p);
    if (tangent) {
      Packed mid;
      for (int j = 0; j < 4; ++j) mid[j] = 0.5 * (r.end[j] + next[j]);
      const Eigen::Matrix4d J = jacobian({mid[0], mid[1], mid[2], mid[3]}, p);
      // derivative of the implicit midpoint map (Cayley form)
      r.Phi = (I - 0.5 * h * J).partialPivLu().solve((I + 0.5 * h * J) * r.Phi);
    }
    r.end = next;
  }
  return r;
}

}  // namespace

MonodromyReport monodromy(const CartesianChart& start, double period, const ReducedParams& p,
                          const MonodromyOptions& opt, bool refine) {
  const Packed y0 = pack(start);
  const std::size_t K = std::max<std::size_t>(16, opt.steps);
  double T = period;
  if (refine) {
    // Newton on beta(T) = beta(0) using the same discrete flow
    for (int it = 0; it < 30; ++it) {
      const Packed yT = flow_with_tangent(y0, T, K, p, false).end;
      const double g = yT[2] - y0[2];
      const double gdot = vf_cartesian({yT[0], yT[1], yT[2], yT[3]}, p).beta;
      if (std::abs(gdot) < 1e-300) break;
      const double dT = g / gdot;
      T -= dT;
      if (std::abs(dT) < 1e-15 * T) break;
    }
  }
  const FlowResult fr = flow_with_tangent(y0, T, K, p, true);

  MonodromyReport r;
  r.period = T;
  r.section_residual = std::sqrt(std::pow(fr.end[0] - y0[0], 2) + std::pow(fr.end[1] - y0[1], 2) +
                                 std::pow(fr.end[2] - y0[2], 2));
  if (refine && r.section_residual >= opt.closure_tol)
    throw Error(ErrorKind::NotPeriodic, "orbit does not close to the requested tolerance");
  r.M = fr.Phi;
  r.M_reduced = r.M.topLeftCorner<3, 3>();
  r.raw = sorted_eigs<4>(r.M);
  r.raw_reduced = sorted_eigs<3>(r.M_reduced);

  using C = std::complex<double>;
  const Eigen::Vector3d f0 = field(start, p).head<3>();
  C flow_mult, mu1, mu2;
  if (f0.norm() > 1e-14 * std::max(1.0, Eigen::Vector3d(to_vec(y0).head<3>()).norm())) {
    flow_mult = f0.dot(r.M_reduced * f0) / f0.squaredNorm();
    Eigen::HouseholderQR<Eigen::Vector3d> qr(f0);
    const Eigen::Matrix3d Qfull = qr.householderQ();
    const Eigen::Matrix<double, 3, 2> P = Qfull.rightCols<2>();
    const Eigen::Matrix2d compressed = P.transpose() * r.M_reduced * P;
    Eigen::EigenSolver<Eigen::Matrix2d> es(compressed, false);
    mu1 = es.eigenvalues()[0];
    mu2 = es.eigenvalues()[1];
  } else {
    // degenerate orbit at an equilibrium: no flow direction to split off
    flow_mult = r.raw_reduced[0];
    mu1 = r.raw_reduced[1];
    mu2 = r.raw_reduced[2];
  }
  r.multipliers = {C(r.M(3, 3)), flow_mult, mu1, mu2};
  r.defect_of_unit_pair = std::abs(r.multipliers[0] - 1.0) + std::abs(r.multipliers[1] - 1.0);
  r.product_defect = std::abs(r.multipliers[0] * r.multipliers[1] * r.multipliers[2] * r.multipliers[3] - 1.0);
  r.circle_defect = std::max(std::abs(std::abs(mu1) - 1.0), std::abs(std::abs(mu2) - 1.0));
  return r;
}

MonodromyReport monodromy(const Trajectory& orbit, const ReducedParams& p, const MonodromyOptions& opt) {
  const PeriodEstimate est = detect_period(orbit);
  return monodromy(to_cartesian(orbit.state(0)), est.period, p, opt, true);
}

double energy_barrier(double N, const ReducedParams& p) {
  const double nc = p.n_cr();
  if (!(N > nc)) throw Error(ErrorKind::BelowThreshold, "energy barrier needs N > n_cr");
  const auto eqs = equilibria(N, p);
  if (eqs.size() < 2) throw Error(ErrorKind::BelowThreshold, "no asymmetric state at this power");
  return invariants(eqs[0].state(), p).H - invariants(eqs[1].state(), p).H;
}

double energy_barrier(double N, double n_cr) { return energy_barrier(N, ReducedParams::unit(n_cr)); }

}  // namespace dwell
