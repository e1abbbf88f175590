#include <cmath>
#include <string>

#include "doctest.h"
#include "dwell/bound_states.hpp"

using namespace dwell;

namespace {

Potential delta_well(double L) {
  PotentialSpec spec{WellKind::DoubleDelta, 1.0, L};
  return build_potential(spec, default_grid(spec, 40.0, 4096));
}

Potential gaussian_well() { return build_potential({WellKind::DoubleGaussian, 1.0, 3.0}, Grid(40.0, 2048)); }

}  // namespace

TEST_CASE("small amplitude limit bifurcates from psi0") {
  Potential pot = delta_well(10.0);
  auto data = compute_spectral_data(pot);
  const double eps = 1e-4;
  auto st = spectral_renormalize(pot, data.omega0 - eps, data.psi0.psi);
  const double a0 = data.a(0, 0, 0, 0);
  CHECK(st.n == doctest::Approx(eps / a0).epsilon(0.02));
  CHECK(std::abs(st.asymmetry) < 1e-14);
  CHECK(st.residual <= 1e-8 * std::sqrt(st.n));
  // profile is parallel to psi0
  double overlap = 0.0;
  for (std::size_t i = 0; i < pot.grid.size(); ++i) overlap += st.profile[i].real() * data.psi0.psi[i];
  overlap *= pot.grid.dx();
  CHECK(overlap * overlap / st.n == doctest::Approx(1.0).epsilon(1e-3));
  // phase fixed positive at the maximum
  double best = 0.0;
  for (const auto& v : st.profile) {
    CHECK(v.imag() == 0.0);
    if (std::abs(v.real()) > std::abs(best)) best = v.real();
  }
  CHECK(best > 0.0);
}

TEST_CASE("asymmetric seed below and above threshold") {
  Potential pot = delta_well(10.0);
  auto data = compute_spectral_data(pot);
  auto seed = seed_profile(pot, Branch::AsymPlus);
  // N ~ 0.4 n_cr
  auto below = spectral_renormalize(pot, data.omega0 - 0.4 * data.n_cr.general * data.a(0, 0, 0, 0), seed);
  CHECK(std::abs(below.asymmetry) < 1e-6);
  double prev = 0.0;
  for (double k : {2.0, 4.0, 8.0}) {
    auto above = spectral_renormalize(pot, data.omega0 - k * data.n_cr.general * data.a(0, 0, 0, 0), seed);
    MESSAGE("N " << above.n << " asym " << above.asymmetry << " its " << above.iterations);
    CHECK(above.asymmetry > 0.1 * above.n);
    CHECK(above.asymmetry > prev);
    CHECK(above.residual <= 1e-8 * std::sqrt(above.n));
    prev = above.asymmetry;
  }
}

TEST_CASE("renormalization errors") {
  Potential pot = delta_well(10.0);
  auto seed = seed_profile(pot, Branch::Symmetric);
  CHECK_THROWS_AS(spectral_renormalize(pot, 0.1, seed), Error);
  RealField zero(seed.size(), 0.0);
  CHECK_THROWS_AS(spectral_renormalize(pot, -0.3, zero), Error);
  // above the linear ground state the focusing iteration has no nonzero fixed point
  auto data = compute_spectral_data(pot);
  try {
    spectral_renormalize(pot, data.omega0 + 0.002, seed);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK((e.kind() == ErrorKind::ConvergedToZero || e.kind() == ErrorKind::IterationDiverged));
  }
}

TEST_CASE("pitchfork on the gaussian well") {
  Potential pot = gaussian_well();
  auto data = compute_spectral_data(pot);
  auto curve = continue_in_omega(pot, data.omega0 - 0.005, data.omega0 - 0.3, 0.005);
  REQUIRE(curve.points.size() == 3 * 60);
  auto t = detect_threshold(curve);
  MESSAGE("gaussian threshold " << t.n_star << " at " << t.omega_star << " (n_cr " << data.n_cr.general << ")");
  CHECK(t.n_star > 0.0);
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    if (p.branch == Branch::Symmetric) CHECK(std::abs(p.asymmetry) <= 1e-12);
    if (p.branch != Branch::Symmetric && p.n > 1.2 * t.n_star) CHECK(std::abs(p.asymmetry) > 0.05 * p.n);
    CHECK(curve.states[i].residual <= 1e-8 * std::sqrt(p.n));
  }
  // mirror branches
  const std::size_t per = 60;
  for (std::size_t k = 0; k < per; ++k) {
    const auto& a = curve.points[per + k];
    const auto& b = curve.points[2 * per + k];
    CHECK(a.n == doctest::Approx(b.n).epsilon(1e-8));
    CHECK(std::abs(a.asymmetry + b.asymmetry) <= 1e-8 * a.n);
  }
  // focusing slope on the symmetric branch near the linear limit
  CHECK(curve.points[1].n > curve.points[0].n);
}

TEST_CASE("double-delta threshold against the reduction") {
  auto rel_gap = [](double L, double step) {
    Potential pot = delta_well(L);
    auto data = compute_spectral_data(pot);
    const double scale = data.n_cr.general * data.a(0, 0, 0, 0);
    auto curve = continue_in_omega(pot, data.omega0 - 0.25 * scale, data.omega0 - 3.0 * scale, step * scale,
                                   {Branch::Symmetric, Branch::AsymPlus});
    auto t = detect_threshold(curve, pot, 1e-2 * scale);
    MESSAGE("L " << L << " n* " << t.n_star << " n_cr " << data.n_cr.general << " bracket " << t.omega_bracket);
    return std::abs(t.n_star - data.n_cr.general) / t.n_star;
  };
  const double g10 = rel_gap(10.0, 0.25);
  const double g14 = rel_gap(14.0, 0.25);
  MESSAGE("relative gaps " << g10 << " " << g14);
  CHECK(g10 < 0.5);
  CHECK(g14 < g10);
}

TEST_CASE("threshold detection on synthetic curves") {
  SolitonCurve c;
  for (int k = 0; k <= 20; ++k) {
    const double n = 0.01 * k;
    c.points.push_back({-1.0 - n, n, 0.0, Branch::Symmetric});
  }
  for (int k = 0; k <= 20; ++k) {
    const double n = 0.01 * k + 0.005;
    c.points.push_back({-1.0 - n, n, std::max(0.0, n - 0.1), Branch::AsymPlus});
  }
  auto t = detect_threshold(c);
  CHECK(t.n_star == doctest::Approx(0.1).epsilon(1e-9));

  SolitonCurve flat;
  for (int k = 0; k <= 10; ++k) flat.points.push_back({-1.0 - 0.01 * k, 0.01 * k, 0.0, Branch::AsymPlus});
  CHECK_THROWS_AS(detect_threshold(flat), Error);
}

TEST_CASE("single well has no pitchfork") {
  // sL < 2: only one bound state, the asymmetric seeds cannot be formed
  Potential pot = build_potential({WellKind::DoubleDelta, 1.0, 1.5}, default_grid({WellKind::DoubleDelta, 1.0, 1.5}));
  auto curve = continue_in_omega(pot, -0.5, -0.8, 0.05, {Branch::Symmetric});
  try {
    detect_threshold(curve);
    FAIL("expected NoBifurcationFound");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoBifurcationFound);
  }
}

TEST_CASE("continuation argument checks") {
  Potential pot = delta_well(10.0);
  CHECK_THROWS_AS(continue_in_omega(pot, -0.3, -0.2, 0.01), Error);
  CHECK_THROWS_AS(continue_in_omega(pot, -0.3, -0.4, -0.01), Error);
  CHECK_THROWS_AS(continue_in_omega(pot, -0.1, -0.4, 0.01), Error);
}
