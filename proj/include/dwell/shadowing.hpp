#pragma once

#include <optional>
#include <vector>

#include "dwell/bifurcation.hpp"
#include "dwell/linear_spectrum.hpp"
#include "dwell/pde_solver.hpp"
#include "dwell/reduced_dynamics.hpp"

namespace dwell {

struct ProjectionResult {
  cplx c0;
  cplx c1;
  FieldState R;
  double defect = 0.0;  // |<psi0, R>| + |<psi1, R>|
};

ProjectionResult project(const FieldState& u, const SpectralData& spectral);

/// A = |c0|, theta = arg c0, alpha + i beta = c1 e^{-i theta}. ChartBreakdown when |c0| <= 1e-8.
CartesianChart to_moving_frame(cplx c0, cplx c1);

/// u0 = e^{i theta}(A psi0 + (alpha + i beta) psi1) on the spectral grid.
FieldState build_initial_data(const CartesianChart& orbit_point, const SpectralData& spectral);

/// i dt R~ = (H + theta'(t)) R~ + g P_c[|v|^2 v], v = A psi0 + (alpha + i beta) psi1 along the orbit.
/// The orbit must be sampled at uniform spacing dt/2 in the Cartesian chart; each step uses the
/// midpoint sample. Returns the field every `stride` steps starting from R~(0) = 0.
struct TildeRResult {
  std::vector<FieldState> series;
  double sup_norm = 0.0;
  double projection_defect = 0.0;  // max |<psi_j, P_c F_b>| over all steps
};

TildeRResult tilde_r_evolve(const Trajectory& orbit, const SpectralData& spectral, double dt, std::size_t stride = 1);

/// g P_c[|v|^2 v] for the two-mode profile v at (A, alpha, beta).
ComplexField projected_source(const CartesianChart& s, const SpectralData& spectral);

struct CouplingErrors {
  double error_A = 0.0;
  double error_alpha = 0.0;
  double error_beta = 0.0;
  double error_theta = 0.0;
};

/// Appendix functionals with the bilinear pairing <f, g> = int f g.
CouplingErrors coupling_errors(double A, double alpha, double beta, const FieldState& R, const SpectralData& spectral);

struct StrichartzNorms {
  double h1_sup = 0.0;     // sup_t ||w||_{H^1}
  double l4_linf = 0.0;    // (int sup_x |w|^4 dt)^{1/4}, trapezoid in time
};

StrichartzNorms strichartz_monitor(const std::vector<FieldState>& w, double sample_dt);

enum class Side { Below, Above };

const char* to_string(Side s) noexcept;

struct ShadowParams {
  double tau = 0.05;                 // |N - n_cr|
  std::optional<double> gamma;       // n_cr = tau^gamma; required for ladders, 7/9 < gamma < 1
  double delta1 = 0.1;               // deviation exponent in the eta verdict
  double delta = 0.1;                // orbit amplitude exponent below threshold
  double epsilon = 0.1;              // horizon exponent
  double periods = 5.0;              // horizon is max(periods, tau^{-epsilon}) reduced periods
  double verdict_constant = 5.0;     // C in sup|eta| <= C tau^{1/2 + delta1}
  double annulus_limit = 0.2;

  void validate() const;
};

struct OrbitSpec {
  Side side = Side::Above;
  std::optional<double> amplitude;   // signed offset from the equilibrium in alpha; default from tau
  std::optional<double> epsilon1;    // explicit polar start (r1, dtheta) instead of an offset
  double dtheta = 0.0;
  double theta0 = 0.0;
};

struct ShadowOptions {
  double dt = 0.05;
  std::size_t samples_per_period = 64;
  bool strict = false;  // throw HorizonTruncated instead of reporting a partial run
};

struct ShadowReport {
  double n = 0.0;
  double n_cr = 0.0;
  double tau = 0.0;
  double period = 0.0;
  double horizon = 0.0;
  double amplitude = 0.0;
  CartesianChart start;

  std::vector<double> times;
  std::vector<double> eta_A, eta_alpha, eta_beta;
  std::vector<double> alpha_pde, beta_pde, alpha_ref, beta_ref;
  std::vector<double> mass, hamiltonian, center_of_mass;
  std::vector<double> w_sup, tilde_r_sup_series;

  double sup_eta = 0.0;
  double eta_bound = 0.0;
  bool eta_ok = false;
  double eta0 = 0.0;
  StrichartzNorms w_norms;
  double tilde_r_sup = 0.0;
  double source_defect = 0.0;
  double projection_defect = 0.0;  // max Parseval / orthogonality defect over samples
  double annulus_width = 0.0;
  bool annulus_ok = false;
  int com_sign_changes = 0;
  double mass_drift = 0.0;
  double h_drift = 0.0;
  bool truncated = false;
  std::string truncation_reason;
};

/// Reference orbit start for a spec at power N: equilibrium plus an alpha offset, or an explicit
/// polar point. Default offsets are -0.3 sqrt(tau) above threshold and tau^{(1+delta)/2} below.
CartesianChart orbit_start(const OrbitSpec& spec, double N, const ReducedParams& p, const ShadowParams& sp);

/// Full pipeline on a delta or Gaussian well: reduced orbit in tensor mode, PDE from the two-mode
/// data, projection, eta against the orbit at equal times, w = R - R~.
ShadowReport run_shadow_experiment(const ShadowParams& params, const SpectralData& spectral,
                                   const OrbitSpec& orbit, const ShadowOptions& opt = {});

/// Separation L of a double-delta well (strength s) whose tensor critical power equals target.
double separation_for_critical_power(double target, double strength = 1.0, double x_max = 40.0,
                                     std::size_t n_points = 4096);

struct LadderPoint {
  double tau = 0.0;
  double separation = 0.0;
  double n_cr = 0.0;
  ShadowReport report;
};

struct LadderResult {
  std::vector<LadderPoint> points;
  double eta_slope = 0.0;      // least-squares d log sup|eta| / d log tau
  double tilde_r_slope = 0.0;
  double w_h1_slope = 0.0;
  double w_l4_slope = 0.0;
  bool monotone = false;
};

/// tau-ladder {tau0, tau0/2, ...}: each rung uses the delta well with n_cr = tau^gamma.
LadderResult run_tau_ladder(const ShadowParams& base, const OrbitSpec& orbit, int rungs = 3,
                            const ShadowOptions& opt = {}, int jobs = 1);

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dwell
