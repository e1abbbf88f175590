#pragma once

#include <array>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dwell/reduced_dynamics.hpp"

namespace dwell {

enum class EquilibriumKind { Symmetric, AsymmetricPlus, AsymmetricMinus };
enum class Stability { EllipticCenter, Saddle, Degenerate };

const char* to_string(EquilibriumKind k) noexcept;
const char* to_string(Stability s) noexcept;

struct Equilibrium {
  EquilibriumKind kind = EquilibriumKind::Symmetric;
  double A = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double rotation = 0.0;  // Omega_*: rho0 = A e^{-i Omega_* t}
  double n = 0.0;         // power N

  CartesianChart state(double theta = 0.0) const { return {A, alpha, beta, theta}; }
};

/// Equilibria at power N. Unit mode reproduces A = sqrt((N+n_cr)/2), alpha = +-sqrt((N-n_cr)/2).
std::vector<Equilibrium> equilibria(double N, const ReducedParams& p);
/// Unit-coefficient convenience with Omega0 = -1.
std::vector<Equilibrium> equilibria(double N, double n_cr);

/// Jacobian of the Cartesian field in (alpha, beta, A, theta) order.
Eigen::Matrix4d jacobian(const CartesianChart& s, const ReducedParams& p);
/// Central differences of vf_cartesian, same ordering.
Eigen::Matrix4d finite_difference_jacobian(const CartesianChart& s, const ReducedParams& p, double h = 1e-6);

struct LinearizationReport {
  Eigen::Matrix4d b_full;
  Eigen::Matrix3d b_reduced;
  std::array<std::complex<double>, 3> eig_closed;   // (+lambda, -lambda, 0)
  std::array<std::complex<double>, 3> eig_numeric;  // sorted by imaginary then real part
  Stability classification = Stability::Degenerate;
  double lambda_squared = 0.0;  // nonzero eigenvalues are +-sqrt(lambda_squared)
};

LinearizationReport linearize(const Equilibrium& eq, const ReducedParams& p);
LinearizationReport linearize(const Equilibrium& eq, double n_cr);

/// Closed-form eigenvalue pair of the reduced linearization at the unit-mode equilibria:
/// symmetric +-2i sqrt((n_cr-N) n_cr) or +-2 sqrt((N-n_cr) n_cr), asymmetric +-2i sqrt(N^2-n_cr^2).
std::array<std::complex<double>, 2> closed_form_eigenvalues(EquilibriumKind kind, double N, double n_cr);

/// Classification from the characteristic polynomial of the reduced block.
Stability classify(const Eigen::Matrix3d& b_reduced);

/// Power at which the symmetric state turns from elliptic to saddle, by bisection.
double locate_stability_flip(double n_cr, double rel_tol = 1e-12);

struct LinearFlow {
  Eigen::Matrix4d propagator;
  bool closed_form = false;
};

/// e^{B t} at an equilibrium. Elliptic cases use the closed form
/// P0 + (I - P0) cos(wt) + B sin(wt)/w with P0 = I + B^2/w^2 and an integrated phase row;
/// saddles fall back to the numeric exponential unless allow_numeric is false (SaddleCase).
LinearFlow linear_flow(const Equilibrium& eq, const ReducedParams& p, double t, bool allow_numeric = true);

struct MonodromyReport {
  double period = 0.0;
  double section_residual = 0.0;
  Eigen::Matrix4d M;
  Eigen::Matrix3d M_reduced;
  // Structured multipliers: phase direction, flow direction, then the two from the
  // compression onto the complement of the flow direction.
  std::array<std::complex<double>, 4> multipliers;
  std::array<std::complex<double>, 4> raw;           // plain eigenvalues of M
  std::array<std::complex<double>, 3> raw_reduced;   // plain eigenvalues of M_reduced
  double defect_of_unit_pair = 0.0;
  double product_defect = 0.0;
  double circle_defect = 0.0;  // max ||lambda_3|-1|, ||lambda_4|-1|
};

struct MonodromyOptions {
  std::size_t steps = 20000;
  double closure_tol = 1e-8;
};

/// Floquet analysis of the periodic orbit through orbit.state(0). The period from
/// detect_period is refined so that the discrete flow closes on the section beta = 0.
MonodromyReport monodromy(const Trajectory& orbit, const ReducedParams& p, const MonodromyOptions& opt = {});
/// Same from an explicit start point and period; `refine` adjusts the period for closure.
MonodromyReport monodromy(const CartesianChart& start, double period, const ReducedParams& p,
                          const MonodromyOptions& opt = {}, bool refine = true);

/// H(symmetric saddle) - H(asymmetric center) at power N; (N - n_cr)^2/2 in unit mode.
double energy_barrier(double N, const ReducedParams& p);
double energy_barrier(double N, double n_cr);

}  // namespace dwell
