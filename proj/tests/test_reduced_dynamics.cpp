#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dwell/reduced_dynamics.hpp"

using namespace dwell;

namespace {

const cplx I(0.0, 1.0);

ReducedParams tensor_like() {
  ReducedParams p;
  p.omega0 = -0.2533;
  p.omega1 = -0.2467;
  p.mode = CoefficientMode::Tensor;
  for (int idx = 0; idx < 16; ++idx) {
    int ones = __builtin_popcount(idx);
    p.a.a[idx] = ones == 0 ? 0.121 : ones == 4 ? 0.1297 : ones == 2 ? 0.1252 : 0.0;
  }
  return p;
}

// i rho' = dH/d(conj rho) = (dH/dx + i dH/dy)/2, evaluated by central differences of H
ModeAmplitudes gradient_field(const ModeAmplitudes& s, const ReducedParams& p) {
  const double h = 1e-6;
  auto H = [&](cplx r0, cplx r1) { return invariants(ModeAmplitudes{r0, r1}, p).H; };
  auto d = [&](int which, cplx dir) {
    cplx a0 = s.rho0, a1 = s.rho1;
    if (which == 0) return (H(a0 + h * dir, a1) - H(a0 - h * dir, a1)) / (2 * h);
    return (H(a0, a1 + h * dir) - H(a0, a1 - h * dir)) / (2 * h);
  };
  cplx g0 = 0.5 * (d(0, 1.0) + I * d(0, I));
  cplx g1 = 0.5 * (d(1, 1.0) + I * d(1, I));
  return {-I * g0, -I * g1};
}

}  // namespace

TEST_CASE("modes field: fixed points and gradient structure") {
  auto p = ReducedParams::unit(0.1);
  auto z = vf_modes({0.0, 0.0}, p);
  CHECK(z.rho0 == cplx(0.0));
  CHECK(z.rho1 == cplx(0.0));

  const double N = 0.05, th = 0.7;
  ModeAmplitudes sym{std::polar(std::sqrt(N), th), 0.0};
  auto d = vf_modes(sym, p);
  CHECK(std::abs(d.rho0 - (-I * (p.omega0 - N) * sym.rho0)) < 1e-15);
  CHECK(d.rho1 == cplx(0.0));

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (auto params : {p, tensor_like()})
    for (int k = 0; k < 20; ++k) {
      ModeAmplitudes s{cplx(u(rng), u(rng)), cplx(u(rng), u(rng))};
      auto a = vf_modes(s, params), b = gradient_field(s, params);
      CHECK(std::abs(a.rho0 - b.rho0) < 1e-6);
      CHECK(std::abs(a.rho1 - b.rho1) < 1e-6);
    }
}

TEST_CASE("Cartesian field: closed forms, equilibria, push-forward") {
  auto p = ReducedParams::unit(0.1);
  const double w = p.omega10();
  CartesianChart s{0.3, 0.12, -0.07, 0.4};
  auto d = vf_cartesian(s, p);
  CHECK(d.alpha == doctest::Approx((w + 2 * s.alpha * s.alpha) * s.beta).epsilon(1e-14));
  CHECK(d.beta == doctest::Approx(-(w - 2 * s.A * s.A + 2 * s.alpha * s.alpha) * s.alpha).epsilon(1e-14));
  CHECK(d.A == doctest::Approx(-2 * s.alpha * s.beta * s.A).epsilon(1e-14));
  CHECK(d.theta == doctest::Approx(-p.omega0 + s.A * s.A + 3 * s.alpha * s.alpha + s.beta * s.beta).epsilon(1e-14));

  const double N = 0.15, nc = 0.1;
  auto sym = vf_cartesian({std::sqrt(N), 0, 0, 0}, p);
  CHECK(sym.A == 0.0);
  CHECK(sym.alpha == 0.0);
  CHECK(sym.beta == 0.0);
  CHECK(sym.theta == doctest::Approx(-p.omega0 + N));
  auto asym = vf_cartesian({std::sqrt((N + nc) / 2), std::sqrt((N - nc) / 2), 0, 0}, p);
  CHECK(std::abs(asym.A) < 1e-16);
  CHECK(std::abs(asym.alpha) < 1e-16);
  CHECK(std::abs(asym.beta) < 1e-16);

  CHECK_THROWS_AS(vf_cartesian({0.0, 0.1, 0.1, 0.0}, p), Error);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (auto params : {p, tensor_like()})
    for (int k = 0; k < 20; ++k) {
      CartesianChart c{0.1 + std::abs(u(rng)), u(rng), u(rng), 3 * u(rng)};
      auto dc = vf_cartesian(c, params);
      // chain rule through rho0 = A e^{i th}, rho1 = (a + i b) e^{i th}
      const cplx ph = std::polar(1.0, c.theta);
      cplx r0dot = (dc.A + I * c.A * dc.theta) * ph;
      cplx r1dot = (cplx(dc.alpha, dc.beta) + I * cplx(c.alpha, c.beta) * dc.theta) * ph;
      auto dm = vf_modes(to_modes(c), params);
      CHECK(std::abs(dm.rho0 - r0dot) < 1e-10);
      CHECK(std::abs(dm.rho1 - r1dot) < 1e-10);
    }
}

TEST_CASE("polar field: equilibria, reduced form, push-forward") {
  auto p = ReducedParams::unit(0.2);
  auto d = vf_polar({0.3, 0.2, 0.0, 0.1}, p);
  CHECK(d.r0 == 0.0);
  CHECK(d.r1 == 0.0);

  const double n = 0.05;
  for (int k = -2; k <= 2; ++k) {
    auto e = vf_polar_reduced({std::sqrt(n / 2), k * std::numbers::pi}, n, p);
    CHECK(std::abs(e.epsilon1) < 1e-14);
    CHECK(std::abs(e.dtheta) < 1e-14);
  }

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.05, 0.4);
  for (auto params : {p, tensor_like()})
    for (int k = 0; k < 20; ++k) {
      PolarChart q{u(rng), u(rng), 8 * (u(rng) - 0.2), 5 * u(rng)};
      auto dq = vf_polar(q, params);
      cplx r0dot = (dq.r0 + I * q.r0 * dq.theta0) * std::polar(1.0, q.theta0);
      cplx r1dot = (dq.r1 + I * q.r1 * (dq.theta0 + dq.dtheta)) * std::polar(1.0, q.theta0 + q.dtheta);
      auto dm = vf_modes(to_modes(q), params);
      CHECK(std::abs(dm.rho0 - r0dot) < 1e-10);
      CHECK(std::abs(dm.rho1 - r1dot) < 1e-10);
      // reduced form is the (r1, dtheta) part at N = r0^2 + r1^2
      const double N = q.r0 * q.r0 + q.r1 * q.r1;
      auto e = vf_polar_reduced({q.r1, q.dtheta}, N - params.n_cr(), params);
      CHECK(e.epsilon1 == doctest::Approx(dq.r1).epsilon(1e-10));
      CHECK(e.dtheta == doctest::Approx(dq.dtheta).epsilon(1e-10));
    }
}

TEST_CASE("invariants and conversions") {
  auto p = ReducedParams::unit(0.1);
  const double N = 0.07;
  auto inv = invariants(CartesianChart{std::sqrt(N), 0, 0, 0.3}, p);
  CHECK(inv.N == doctest::Approx(N).epsilon(1e-15));
  CHECK(inv.H == doctest::Approx(p.omega0 * N - N * N / 2).epsilon(1e-14));
  auto zero = invariants(ModeAmplitudes{0.0, 0.0}, p);
  CHECK(zero.N == 0.0);
  CHECK(zero.H == 0.0);

  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (auto params : {p, tensor_like()})
    for (int k = 0; k < 50; ++k) {
      CartesianChart c{0.05 + std::abs(u(rng)), u(rng), u(rng), 6 * u(rng)};
      CHECK(std::abs(hamiltonian_cartesian(c, params) - invariants(c, params).H) < 1e-12);
      auto back = to_cartesian(to_modes(c));
      CHECK(back.A == doctest::Approx(c.A).epsilon(1e-12));
      CHECK(std::abs(back.alpha - c.alpha) < 1e-12);
      CHECK(std::abs(back.beta - c.beta) < 1e-12);
      CHECK(std::abs(std::remainder(back.theta - c.theta, 2 * std::numbers::pi)) < 1e-12);
      auto pol = to_cartesian(to_polar(c));
      CHECK(std::abs(pol.alpha - c.alpha) < 1e-12);
      CHECK(std::abs(pol.beta - c.beta) < 1e-12);
      ModeAmplitudes m = to_modes(c);
      auto m2 = to_modes(to_polar(m));
      CHECK(std::abs(m2.rho0 - m.rho0) < 1e-12);
      CHECK(std::abs(m2.rho1 - m.rho1) < 1e-12);
    }

  auto c = to_cartesian(ModeAmplitudes{2.0, 0.0});
  CHECK(c.A == 2.0);
  CHECK(c.alpha == 0.0);
  CHECK(c.beta == 0.0);
  CHECK(c.theta == 0.0);
  CartesianChart ex{1.0, 0.1, 0.2, std::numbers::pi / 3};
  auto rt = to_cartesian(to_modes(ex));
  CHECK(std::abs(rt.theta - ex.theta) < 1e-12);
  ModeAmplitudes m{std::polar(0.3, 0.4), std::polar(0.2, 1.5)};
  auto q = to_polar(m);
  CHECK(q.r0 == doctest::Approx(0.3));
  CHECK(q.r1 == doctest::Approx(0.2));
  CHECK(q.dtheta == doctest::Approx(1.1));
  CHECK_THROWS_AS(to_cartesian(ModeAmplitudes{0.0, 1.0}), Error);
}

TEST_CASE("epsilon0 recovery") {
  const double nc = 0.2, n = 0.05, e1 = 0.1;
  double e0 = recover_epsilon0(e1, n, nc);
  CHECK(std::abs(e0 * e0 + e1 * e1 + 2 * std::sqrt(nc) * e0 - n) < 1e-15);
  CHECK(std::abs(e0) < 0.1);
  CHECK(std::abs(recover_epsilon0(std::sqrt(n), n, nc)) < 1e-16);
}

TEST_CASE("symmetric equilibrium stays put") {
  auto p = ReducedParams::unit(0.1);
  const double N = 0.05;
  auto tr = integrate(CartesianChart{std::sqrt(N), 0, 0, 0}, p, 50.0, 0.05);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    auto c = std::get<CartesianChart>(tr.state(i));
    CHECK(c.A == doctest::Approx(std::sqrt(N)).epsilon(1e-14));
    CHECK(c.alpha == 0.0);
    CHECK(c.beta == 0.0);
    CHECK(c.theta == doctest::Approx((-p.omega0 + N) * tr.times[i]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(detect_period(tr), Error);
}

TEST_CASE("periods approach the linear values") {
  const double nc = 0.1;
  {
    const double N = 0.05, T = linear_period_symmetric(N, nc);
    auto p = ReducedParams::unit(nc);
    const double a = 1e-4;
    auto tr = integrate(CartesianChart{std::sqrt(N - a * a), a, 0, 0}, p, 6 * T, T / 20000);
    CHECK(detect_period(tr).period == doctest::Approx(T).epsilon(1e-5));
  }
  {
    const double N = 0.15, T = linear_period_asymmetric(N, nc);
    auto p = ReducedParams::unit(nc);
    const double al = std::sqrt((N - nc) / 2) + 1e-4;
    auto tr = integrate(CartesianChart{std::sqrt(N - al * al), al, 0, 0}, p, 6 * T, T / 20000);
    auto est = detect_period(tr);
    CHECK(est.period == doctest::Approx(T).epsilon(1e-5));
    CHECK(est.crossings.size() >= 5);
    CHECK(est.uncertainty < 1e-6 * T);
  }
}

TEST_CASE("implicit midpoint conserves N and H") {
  const double N = 0.15, nc = 0.1, T = linear_period_asymmetric(N, nc);
  auto p = ReducedParams::unit(nc);
  const double al = std::sqrt((N - nc) / 2) + 0.01;
  auto tr = integrate(CartesianChart{std::sqrt(N - al * al), al, 0.0, 0}, p, 20 * T, T / 2000,
                      {Method::ImplicitMidpoint, 50});
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK(std::abs(tr.N[i] - tr.N[0]) < 1e-12);
    CHECK(std::abs(tr.H[i] - tr.H[0]) < 1e-9);
  }
}

TEST_CASE("adaptive RK agrees with implicit midpoint and conserves within tolerance") {
  const double N = 0.15, nc = 0.1, T = linear_period_asymmetric(N, nc);
  auto p = ReducedParams::unit(nc);
  CartesianChart s0{std::sqrt(0.1), 0.2, 0.05, 0.0};
  s0.A = std::sqrt(N - 0.2 * 0.2 - 0.05 * 0.05);
  auto rk = integrate(s0, p, 3 * T, T / 100, {Method::AdaptiveRK, 1, 1e-10});
  auto im = integrate(s0, p, 3 * T, T / 20000, {Method::ImplicitMidpoint, 200});
  REQUIRE(rk.size() == im.size());
  for (std::size_t i = 0; i < rk.size(); ++i) {
    CHECK(rk.times[i] == doctest::Approx(im.times[i]).epsilon(1e-12));
    for (int j = 0; j < 3; ++j) CHECK(std::abs(rk.states[i][j] - im.states[i][j]) < 1e-6);
    CHECK(std::abs(rk.N[i] - rk.N[0]) < 1e-8);
  }
}

TEST_CASE("charts give the same trajectory") {
  const double nc = 0.1;
  auto p = ReducedParams::unit(nc);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-0.15, 0.15);
  for (int k = 0; k < 3; ++k) {
    CartesianChart c{0.3 + 0.1 * std::abs(u(rng)), u(rng), u(rng), 0.0};
    const double N = c.A * c.A + c.alpha * c.alpha + c.beta * c.beta;
    const double T = N > nc ? linear_period_asymmetric(N, nc) : linear_period_symmetric(N, nc);
    // implicit midpoint is not chart covariant; compare with tight adaptive steps
    const double dt = T / 40;
    IntegrateOptions opt{Method::AdaptiveRK, 1, 1e-13};
    auto tc = integrate(c, p, 10 * T, dt, opt);
    auto tm = integrate(to_modes(c), p, 10 * T, dt, opt);
    auto tp = integrate(to_polar(c), p, 10 * T, dt, opt);
    double worst = 0.0;
    for (std::size_t i = 0; i < tc.size(); ++i) {
      auto a = to_modes(tc.state(i)), b = to_modes(tm.state(i)), d = to_modes(tp.state(i));
      worst = std::max({worst, std::abs(a.rho0 - b.rho0), std::abs(a.rho1 - b.rho1), std::abs(d.rho0 - b.rho0),
                        std::abs(d.rho1 - b.rho1)});
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("reflection and time-reversal structure") {
  const double N = 0.15, nc = 0.1, T = linear_period_asymmetric(N, nc);
  auto p = ReducedParams::unit(nc);
  const double al = std::sqrt((N - nc) / 2) + 0.02;
  CartesianChart s{std::sqrt(N - al * al), al, 0.0, 0.0};
  CartesianChart r{s.A, -s.alpha, -s.beta, 0.0};
  IntegrateOptions opt{Method::ImplicitMidpoint, 1};
  auto a = integrate(s, p, 2 * T, T / 2000, opt);
  auto b = integrate(r, p, 2 * T, T / 2000, opt);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.states[i][1] == doctest::Approx(-b.states[i][1]).epsilon(1e-12));
    CHECK(a.states[i][2] == doctest::Approx(-b.states[i][2]).epsilon(1e-12));
  }
  // alpha even and beta odd in t, so int alpha beta over a period vanishes
  const double Tm = detect_period(integrate(s, p, 3 * T, T / 20000)).period;
  auto one = integrate(s, p, Tm, Tm / 20000, opt);
  double acc = 0.0, scale = 0.0;
  for (std::size_t i = 0; i + 1 < one.size(); ++i) {
    const double h = one.times[i + 1] - one.times[i];
    acc += 0.5 * h * (one.states[i][1] * one.states[i][2] + one.states[i + 1][1] * one.states[i + 1][2]);
    scale += 0.5 * h * std::abs(one.states[i][1] * one.states[i][2]);
  }
  CHECK(std::abs(acc) < 1e-6 * scale);
}

TEST_CASE("bounded orbits close within three linear periods") {
  const double nc = 0.1;
  auto p = ReducedParams::unit(nc);
  for (double N : {0.05, 0.15}) {
    const double T = N > nc ? linear_period_asymmetric(N, nc) : linear_period_symmetric(N, nc);
    for (double amp : {0.01, 0.05}) {
      const double al = (N > nc ? std::sqrt((N - nc) / 2) : 0.0) + amp;
      auto tr = integrate(CartesianChart{std::sqrt(N - al * al), al, 0, 0}, p, 3 * T, T / 2000);
      CHECK(detect_period(tr).crossings.size() >= 1);
      CHECK(detect_period(tr).period < 3 * T);
    }
  }
}

TEST_CASE("chart breakdown falls back to modes") {
  auto p = ReducedParams::unit(0.1);
  auto tr = integrate(CartesianChart{1e-9, 0.2, 0.0, 0.0}, p, 1.0, 0.01);
  CHECK(tr.fell_back_to_modes);
  CHECK(tr.chart == Chart::Modes);
  CHECK(tr.N.back() == doctest::Approx(tr.N.front()).epsilon(1e-13));
}

TEST_CASE("phase plane: trapped orbits above, shrinking oscillations below") {
  const auto p = ReducedParams::unit(0.2);
  const double n = 0.05;
  const double c = std::sqrt(n / 2);
  auto up = phase_plane_scan(n, p, {{0.9 * c, 0.0}, {1.1 * c, 0.0}, {c, 0.3}, {c, std::numbers::pi + 0.3}});
  for (const auto& o : up) {
    CHECK(o.librating);
    CHECK(o.epsilon1_min > 0.0);
    if (o.start.dtheta < 1.0) CHECK(std::abs(o.winding) > 2.0 * std::numbers::pi * 3);
  }
  // the last start circles the k = 1 center, not the k = 0 one
  CHECK(std::abs(up.back().winding) < std::numbers::pi);

  auto down = phase_plane_scan(-n, p, {{0.02, 0.0}, {0.05, 0.0}, {0.1, 0.0}});
  double prev = 0.0;
  for (const auto& o : down) {
    const double amp = o.epsilon1_max - o.epsilon1_min;
    CHECK(amp > prev);
    prev = amp;
    CHECK(o.epsilon1_max <= o.start.epsilon1 * 1.0000001);
  }
  CHECK(down.front().epsilon1_max - down.front().epsilon1_min < 0.03);
  CHECK_THROWS_AS(phase_plane_scan(n, p, {{1.0, 0.0}}), Error);
}
