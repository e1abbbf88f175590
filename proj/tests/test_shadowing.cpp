#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dwell/shadowing.hpp"

using namespace dwell;

namespace {

// small box so the full pipeline stays cheap
const SpectralData& small_well() {
  static const SpectralData data = [] {
    PotentialSpec spec{WellKind::DoubleDelta, 1.0, 7.0};
    return compute_spectral_data(build_potential(spec, default_grid(spec, 25.0, 1024)));
  }();
  return data;
}

ComplexField bump(const Grid& grid) {
  ComplexField f(grid.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = grid.x(i);
    f[i] = cplx(std::exp(-(x - 1.0) * (x - 1.0)), 0.5 * x * std::exp(-x * x / 4.0));
  }
  return f;
}

}  // namespace

TEST_CASE("projection onto the two modes") {
  const auto& sd = small_well();
  const Grid& grid = sd.grid();
  const auto& p0 = sd.psi0.psi;
  const auto& p1 = sd.psi1.psi;

  FieldState u{grid, ComplexField(grid.size()), 0.0};
  for (std::size_t i = 0; i < grid.size(); ++i) u.values[i] = 2.0 * p0[i];
  auto pr = project(u, sd);
  CHECK(std::abs(pr.c0 - 2.0) < 1e-12);
  CHECK(std::abs(pr.c1) < 1e-12);
  CHECK(sup_norm(pr.R.values) < 1e-12);

  // psi0 + i psi1 + rho with rho orthogonal to both
  ComplexField rho = bump(grid);
  const cplx r0 = project_onto(grid, p0, rho), r1 = project_onto(grid, p1, rho);
  for (std::size_t i = 0; i < grid.size(); ++i) rho[i] -= r0 * p0[i] + r1 * p1[i];
  for (std::size_t i = 0; i < grid.size(); ++i) u.values[i] = p0[i] + cplx(0.0, 1.0) * p1[i] + rho[i];
  pr = project(u, sd);
  CHECK(std::abs(pr.c0 - 1.0) < 1e-12);
  CHECK(std::abs(pr.c1 - cplx(0.0, 1.0)) < 1e-12);
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(pr.R.values[i] - rho[i]));
  CHECK(err < 1e-12);

  // Parseval split on a random field
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (auto& v : u.values) v = cplx(nd(rng), nd(rng));
  u.values[0] = 0.0;
  pr = project(u, sd);
  const double total = mass(grid, u.values);
  const double split = std::norm(pr.c0) + std::norm(pr.c1) + mass(grid, pr.R.values);
  CHECK(std::abs(total - split) <= 1e-10 * total);
  CHECK(pr.defect < 1e-10);

  FieldState other{Grid(25.0, 512), ComplexField(512), 0.0};
  CHECK_THROWS_AS(project(other, sd), Error);
}

TEST_CASE("moving frame") {
  auto m = to_moving_frame(3.0, 0.0);
  CHECK(m.A == 3.0);
  CHECK(m.alpha == 0.0);
  CHECK(m.beta == 0.0);
  CHECK(m.theta == 0.0);

  const cplx c0 = std::polar(1.0, std::numbers::pi / 2);
  m = to_moving_frame(c0, cplx(0.0, 1.0) * c0);
  CHECK(m.A == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(m.alpha) < 1e-15);
  CHECK(m.beta == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.theta == doctest::Approx(std::numbers::pi / 2).epsilon(1e-15));

  // agrees with the chart conversion of the mode amplitudes
  const CartesianChart s{0.3, -0.2, 0.15, 1.1};
  auto modes = std::get<ModeAmplitudes>(convert(s, Chart::Modes));
  m = to_moving_frame(modes.rho0, modes.rho1);
  CHECK(m.A == doctest::Approx(s.A).epsilon(1e-14));
  CHECK(m.alpha == doctest::Approx(s.alpha).epsilon(1e-14));
  CHECK(m.beta == doctest::Approx(s.beta).epsilon(1e-14));
  CHECK(m.theta == doctest::Approx(s.theta).epsilon(1e-14));

  try {
    to_moving_frame(1e-9, 1.0);
    FAIL("expected ChartBreakdown");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ChartBreakdown);
  }
}

TEST_CASE("two-mode initial data") {
  const auto& sd = small_well();
  const Grid& grid = sd.grid();
  auto u = build_initial_data({std::sqrt(0.05), 0.0, 0.0, 0.0}, sd);
  double err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) err = std::max(err, std::abs(u.values[i] - std::sqrt(0.05) * sd.psi0.psi[i]));
  CHECK(err < 1e-15);

  // asymmetric center of the unit reduction at N = 0.15, n_cr = 0.1
  const auto eq = equilibria(0.15, ReducedParams::unit(0.1))[1];
  CHECK(eq.A == doctest::Approx(std::sqrt(0.125)).epsilon(1e-12));
  CHECK(eq.alpha == doctest::Approx(std::sqrt(0.025)).epsilon(1e-12));
  u = build_initial_data({eq.A, eq.alpha, eq.beta, 0.0}, sd);
  err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    err = std::max(err, std::abs(u.values[i] - std::sqrt(0.125) * sd.psi0.psi[i] - std::sqrt(0.025) * sd.psi1.psi[i]));
  CHECK(err < 1e-14);

  const CartesianChart s{0.2, 0.05, -0.03, 0.7};
  auto pr = project(build_initial_data(s, sd), sd);
  auto back = to_moving_frame(pr.c0, pr.c1);
  CHECK(std::abs(back.A - s.A) < 1e-12);
  CHECK(std::abs(back.alpha - s.alpha) < 1e-12);
  CHECK(std::abs(back.beta - s.beta) < 1e-12);
  CHECK(std::abs(back.theta - s.theta) < 1e-12);
  CHECK(pr.defect <= 1e-12);
  CHECK(sup_norm(pr.R.values) <= 1e-12);
}

TEST_CASE("driven radiation equation") {
  const auto& sd = small_well();
  const auto p = ReducedParams::tensor(sd);
  const double dt = 0.1;

  // zero orbit, zero source
  auto zero = integrate(ModeAmplitudes{0.0, 0.0}, p, 5.0, 0.5 * dt);
  auto r = tilde_r_evolve(zero, sd, dt);
  CHECK(r.sup_norm == 0.0);
  CHECK(r.series.size() == 51);

  const double N = 0.7 * sd.n_cr.general;
  auto orbit = integrate(CartesianChart{std::sqrt(N - 0.01), 0.1, 0.0, 0.0}, p, 20.0, 0.5 * dt);
  r = tilde_r_evolve(orbit, sd, dt, 10);
  CHECK(r.projection_defect <= 1e-10);
  CHECK(r.sup_norm > 0.0);
  CHECK(r.series.size() == 21);
  CHECK(r.series.back().time == doctest::Approx(20.0));

  auto f = projected_source({0.2, 0.1, 0.05, 0.0}, sd);
  CHECK(std::abs(project_onto(sd.grid(), sd.psi0.psi, f)) < 1e-12);
  CHECK(std::abs(project_onto(sd.grid(), sd.psi1.psi, f)) < 1e-12);

  // orbit at the wrong spacing
  CHECK_THROWS_AS(tilde_r_evolve(orbit, sd, 2.0 * dt), Error);
}

TEST_CASE("coupling functionals") {
  const auto& sd = small_well();
  const Grid& grid = sd.grid();
  FieldState R{grid, ComplexField(grid.size()), 0.0};
  auto e = coupling_errors(0.2, 0.1, 0.05, R, sd);
  CHECK(e.error_A == 0.0);
  CHECK(e.error_alpha == 0.0);
  CHECK(e.error_beta == 0.0);
  CHECK(e.error_theta == 0.0);

  // linear regime: halving R halves every functional
  const ComplexField b = bump(grid);
  auto at = [&](double h) {
    FieldState s{grid, ComplexField(grid.size()), 0.0};
    for (std::size_t i = 0; i < b.size(); ++i) s.values[i] = h * b[i];
    return coupling_errors(0.2, 0.1, 0.05, s, sd);
  };
  const double h = 1e-4;
  auto e1 = at(h), e2 = at(h / 2);
  for (auto [a, c] : {std::pair{e1.error_A, e2.error_A}, std::pair{e1.error_alpha, e2.error_alpha},
                      std::pair{e1.error_beta, e2.error_beta}, std::pair{e1.error_theta, e2.error_theta}}) {
    REQUIRE(a != 0.0);
    CHECK(std::log2(std::abs(a / c)) == doctest::Approx(1.0).epsilon(0.1));
  }
  // quadratic in the mode amplitudes at fixed R
  auto small = coupling_errors(0.02, 0.01, 0.005, [&] {
    FieldState s{grid, ComplexField(grid.size()), 0.0};
    for (std::size_t i = 0; i < b.size(); ++i) s.values[i] = 1e-6 * b[i];
    return s;
  }(), sd);
  auto big = coupling_errors(0.2, 0.1, 0.05, [&] {
    FieldState s{grid, ComplexField(grid.size()), 0.0};
    for (std::size_t i = 0; i < b.size(); ++i) s.values[i] = 1e-6 * b[i];
    return s;
  }(), sd);
  CHECK(std::abs(big.error_A / small.error_A) == doctest::Approx(100.0).epsilon(0.01));

  CHECK_THROWS_AS(coupling_errors(1e-9, 0.1, 0.0, R, sd), Error);
}

TEST_CASE("strichartz monitor") {
  const Grid grid(10.0, 256);
  std::vector<FieldState> zeros(5, FieldState{grid, ComplexField(grid.size()), 0.0});
  auto z = strichartz_monitor(zeros, 0.1);
  CHECK(z.h1_sup == 0.0);
  CHECK(z.l4_linf == 0.0);

  FieldState f{grid, ComplexField(grid.size()), 0.0};
  for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = 0.7 * std::exp(-grid.x(i) * grid.x(i));
  std::vector<FieldState> still(41, f);
  auto s = strichartz_monitor(still, 0.25);
  CHECK(s.l4_linf == doctest::Approx(sup_norm(f.values) * std::pow(10.0, 0.25)).epsilon(1e-12));
  CHECK(s.h1_sup > 0.0);
}

TEST_CASE("orbit starts and parameter checks") {
  const auto p = ReducedParams::unit(0.1);
  ShadowParams sp;
  auto above = orbit_start({Side::Above}, 0.15, p, sp);
  const auto eq = equilibria(0.15, p)[1];
  CHECK(above.alpha == doctest::Approx(eq.alpha - 0.3 * std::sqrt(0.05)));
  CHECK(above.A * above.A + above.alpha * above.alpha == doctest::Approx(0.15));
  auto below = orbit_start({Side::Below}, 0.05, p, sp);
  CHECK(below.alpha == doctest::Approx(std::pow(0.05, 0.55)));
  OrbitSpec polar{Side::Above, std::nullopt, 0.2, 1.0, 0.5};
  auto q = orbit_start(polar, 0.15, p, sp);
  CHECK(q.alpha == doctest::Approx(0.2 * std::cos(1.0)));
  CHECK(q.beta == doctest::Approx(0.2 * std::sin(1.0)));
  CHECK(q.theta == 0.5);
  CHECK_THROWS_AS(orbit_start({Side::Above}, 0.05, p, sp), Error);
  CHECK_THROWS_AS(orbit_start({Side::Below, 0.5}, 0.05, p, sp), Error);

  ShadowParams bad;
  bad.gamma = 0.7;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.gamma = 0.8;
  CHECK_NOTHROW(bad.validate());
  bad.tau = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);

  CHECK(loglog_slope({1.0, 0.5, 0.25}, {3.0, 3.0 * std::pow(0.5, 0.7), 3.0 * std::pow(0.25, 0.7)}) ==
        doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("separation for a target critical power") {
  const double L = separation_for_critical_power(0.1, 1.0, 25.0, 1024);
  PotentialSpec spec{WellKind::DoubleDelta, 1.0, L};
  auto data = compute_spectral_data(build_potential(spec, default_grid(spec, 25.0, 1024)));
  CHECK(data.n_cr.general == doctest::Approx(0.1).epsilon(1e-8));
  CHECK_THROWS_AS(separation_for_critical_power(50.0, 1.0, 25.0, 1024), Error);
}

TEST_CASE("short shadowing run") {
  const auto& sd = small_well();
  ShadowParams sp;
  sp.tau = 0.02;
  sp.periods = 1.0;
  sp.epsilon = 1e-6;
  ShadowOptions opt;
  opt.dt = 0.1;

  OrbitSpec orbit{Side::Below};
  auto rep = run_shadow_experiment(sp, sd, orbit, opt);
  MESSAGE("period " << rep.period << " eta " << rep.sup_eta << " annulus " << rep.annulus_width);
  CHECK_FALSE(rep.truncated);
  // pure two-mode data: only quadrature rounding at t = 0
  CHECK(rep.eta0 <= 1e-14);
  CHECK(rep.w_sup.front() <= 1e-14);
  CHECK(rep.horizon >= rep.period);
  CHECK(rep.times.size() >= 64);
  CHECK(rep.mass_drift <= 1e-10);
  CHECK(rep.h_drift <= 1e-8);
  CHECK(rep.projection_defect <= 1e-10);
  CHECK(rep.source_defect <= 1e-10);
  CHECK(rep.eta_ok);
  CHECK(rep.annulus_ok);
  CHECK(rep.com_sign_changes >= 2);  // the orbit encircles the symmetric state

  // global phase does not enter any reported norm
  orbit.theta0 = 1.3;
  auto turned = run_shadow_experiment(sp, sd, orbit, opt);
  CHECK(std::abs(turned.sup_eta - rep.sup_eta) <= 1e-10);
  CHECK(std::abs(turned.w_norms.h1_sup - rep.w_norms.h1_sup) <= 1e-10);
  CHECK(std::abs(turned.w_norms.l4_linf - rep.w_norms.l4_linf) <= 1e-10);
  CHECK(std::abs(turned.tilde_r_sup - rep.tilde_r_sup) <= 1e-10);
  CHECK(std::abs(turned.annulus_width - rep.annulus_width) <= 1e-10);

  ShadowOptions strict = opt;
  strict.dt = -1.0;
  CHECK_THROWS_AS(run_shadow_experiment(sp, sd, orbit, strict), Error);
}
