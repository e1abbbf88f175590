#pragma once

#include <array>
#include <variant>
#include <vector>

#include "dwell/core.hpp"
#include "dwell/linear_spectrum.hpp"

namespace dwell {

struct ModeAmplitudes {
  cplx rho0;
  cplx rho1;
};

/// rho0 = A e^{i theta}, rho1 = (alpha + i beta) e^{i theta}.
struct CartesianChart {
  double A = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double theta = 0.0;
};

/// rho0 = r0 e^{i theta0}, rho1 = r1 e^{i (theta0 + dtheta)}.
struct PolarChart {
  double r0 = 0.0;
  double r1 = 0.0;
  double dtheta = 0.0;
  double theta0 = 0.0;
};

/// Two-dimensional reduction: r1 = epsilon1, r0^2 = N - epsilon1^2 with N = n_cr + n.
struct EpsilonState {
  double epsilon1 = 0.0;
  double dtheta = 0.0;
};

enum class Chart { Modes, Cartesian, Polar };
enum class CoefficientMode { Unit, Tensor };

using ReducedState = std::variant<ModeAmplitudes, CartesianChart, PolarChart>;

struct ReducedParams {
  double omega0 = -1.0;
  double omega1 = -0.8;
  double g = -1.0;
  CoefficientMode mode = CoefficientMode::Unit;
  OverlapTensor a = OverlapTensor::unit();

  double omega10() const { return omega1 - omega0; }
  double a00() const { return a(0, 0, 0, 0); }
  double a11() const { return a(1, 1, 1, 1); }
  double a01() const { return a(0, 0, 1, 1); }
  /// Omega10 / (g (a00 - 3 a01)); equals Omega10 / 2 in unit mode.
  double n_cr() const;

  /// Unit coefficients with Omega1 - Omega0 = 2 n_cr.
  static ReducedParams unit(double n_cr, double omega0 = -1.0);
  static ReducedParams tensor(const SpectralData& spectral);
};

// Vector fields. Each returns the time derivative in the same chart.
ModeAmplitudes vf_modes(const ModeAmplitudes& s, const ReducedParams& p);
CartesianChart vf_cartesian(const CartesianChart& s, const ReducedParams& p);
PolarChart vf_polar(const PolarChart& s, const ReducedParams& p);
/// (epsilon1', dtheta') of the reduced polar system at power offset n = N - n_cr.
EpsilonState vf_polar_reduced(const EpsilonState& s, double n, const ReducedParams& p);

struct Invariants {
  double N = 0.0;
  double H = 0.0;
};

Invariants invariants(const ReducedState& s, const ReducedParams& p);
/// H written directly in (A, alpha, beta).
double hamiltonian_cartesian(const CartesianChart& s, const ReducedParams& p);

ModeAmplitudes to_modes(const ReducedState& s);
CartesianChart to_cartesian(const ReducedState& s);
PolarChart to_polar(const ReducedState& s);
ReducedState convert(const ReducedState& s, Chart to);
Chart chart_of(const ReducedState& s);

/// Root of eps0^2 + 2 sqrt(n_cr) eps0 = n - eps1^2 nearest zero.
double recover_epsilon0(double epsilon1, double n, double n_cr);
EpsilonState to_epsilon(const PolarChart& s);
PolarChart from_epsilon(const EpsilonState& s, double N, double theta0 = 0.0);

enum class Method { AdaptiveRK, ImplicitMidpoint };

struct IntegrateOptions {
  Method method = Method::ImplicitMidpoint;
  std::size_t record_every = 1;  // implicit midpoint: steps between samples
  double tolerance = 1e-10;      // adaptive RK local tolerance
};

struct Trajectory {
  Chart chart = Chart::Cartesian;
  bool fell_back_to_modes = false;
  std::vector<double> times;
  std::vector<std::array<double, 4>> states;  // chart coordinates, see pack()
  std::vector<double> N;
  std::vector<double> H;

  std::size_t size() const { return times.size(); }
  ReducedState state(std::size_t i) const;
};

/// Raw coordinates: modes (Re rho0, Im rho0, Re rho1, Im rho1), Cartesian (A, alpha, beta, theta),
/// polar (r0, r1, dtheta, theta0).
std::array<double, 4> pack(const ReducedState& s);
ReducedState unpack(Chart chart, const std::array<double, 4>& y);
std::array<double, 4> vf_packed(Chart chart, const std::array<double, 4>& y, const ReducedParams& p);

/// One implicit-midpoint step, fixed-point iteration to rounding level.
std::array<double, 4> implicit_midpoint_step(Chart chart, const std::array<double, 4>& y,
                                             double dt, const ReducedParams& p);

Trajectory integrate(const ReducedState& s0, const ReducedParams& p, double t_end, double dt,
                     const IntegrateOptions& opt = {});

struct PeriodEstimate {
  double period = 0.0;
  double uncertainty = 0.0;
  std::vector<double> crossings;
};

/// Section beta = 0 with beta decreasing; in the polar chart beta = r1 sin(dtheta).
PeriodEstimate detect_period(const Trajectory& traj);

/// Linear periods: symmetric center pi/sqrt((n_cr-N) n_cr), asymmetric center pi/sqrt(N^2-n_cr^2).
double linear_period_symmetric(double N, double n_cr);
double linear_period_asymmetric(double N, double n_cr);

/// One orbit of the (epsilon1, dtheta) plane at power N = n_cr + n, dtheta unwrapped.
struct PhaseOrbit {
  EpsilonState start;
  std::vector<double> times;
  std::vector<double> epsilon1;
  std::vector<double> dtheta;
  double epsilon1_min = 0.0;
  double epsilon1_max = 0.0;
  double dtheta_span = 0.0;  // max - min of the unwrapped dtheta
  bool librating = false;    // dtheta stays inside a window narrower than pi
  double winding = 0.0;      // net angle swept around `center`, radians
};

struct PhaseScanOptions {
  double t_end = 0.0;  // 0: four linear periods of the relevant center
  double dt = 0.01;
  std::size_t record_every = 10;
  EpsilonState center;  // winding reference; default (sqrt(n/2), 0) when n > 0
};

/// Implicit-midpoint orbits of the polar system from each start. InvalidArgument if a start has
/// epsilon1 < 0 or epsilon1^2 >= N.
std::vector<PhaseOrbit> phase_plane_scan(double n, const ReducedParams& p, const std::vector<EpsilonState>& starts,
                                         const PhaseScanOptions& opt = {});

}  // namespace dwell
