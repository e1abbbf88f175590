#pragma once

#include <optional>
#include <vector>

#include "dwell/core.hpp"
#include "dwell/linear_spectrum.hpp"

namespace dwell {

enum class Branch { Symmetric, AsymPlus, AsymMinus };

const char* to_string(Branch b) noexcept;

/// Solution of (-d2/dx2 + V) Psi + g |Psi|^2 Psi = Omega Psi on the finite-difference grid.
struct BoundState {
  Grid grid;
  ComplexField profile;  // real, positive at the maximum node
  double omega = 0.0;
  double n = 0.0;
  double asymmetry = 0.0;  // int_{x>0} |Psi|^2 - int_{x<0} |Psi|^2
  double residual = 0.0;   // L2 norm of the elliptic residual
  std::size_t iterations = 0;
};

struct RenormOptions {
  double tol = 1e-10;  // sup-norm change relative to sup |Psi|
  double mixing = 0.5;
  std::size_t max_iter = 50000;
  double g = -1.0;
};

/// Spectral renormalization Psi <- M^{3/2} (H - Omega)^{-1} [|g| Psi^3], M = <Psi, (H-Omega)Psi> / <Psi, |g| Psi^4>,
/// damped by `mixing`. An even seed is kept exactly even.
BoundState spectral_renormalize(const Potential& potential, double omega, std::span<const double> seed,
                                const RenormOptions& opt = {});

/// Seeds: psi0 (Symmetric), psi0 + 0.3 psi1 (AsymPlus) and its reflection psi0 - 0.3 psi1 (AsymMinus).
RealField seed_profile(const Potential& potential, Branch branch);

struct CurvePoint {
  double omega = 0.0;
  double n = 0.0;
  double asymmetry = 0.0;
  Branch branch = Branch::Symmetric;
};

struct SolitonCurve {
  std::vector<CurvePoint> points;   // grouped by branch, each group ordered by decreasing omega
  std::vector<BoundState> states;   // parallel to points
  double omega0 = 0.0;              // linear ground state energy
};

/// Natural-parameter continuation from omega_start down to omega_end (step > 0 is the decrement).
/// Each point reuses the previous profile as seed. BranchLost if renormalization fails mid-branch.
SolitonCurve continue_in_omega(const Potential& potential, double omega_start, double omega_end, double step,
                               const std::vector<Branch>& branches = {Branch::Symmetric, Branch::AsymPlus,
                                                                      Branch::AsymMinus},
                               const RenormOptions& opt = {});

struct Threshold {
  double n_star = 0.0;
  double omega_star = 0.0;
  double noise_floor = 0.0;
  double omega_bracket = 0.0;  // width of the final omega bracket (0 for curve-only estimates)
};

/// Asymmetry above which a state counts as asymmetric: 10x the symmetric-branch floor, and at
/// least 1e-5 N so that slowly decaying transients near the pitchfork are not counted.
double asymmetry_floor(const SolitonCurve& curve);

/// Curve-only estimate: the first asymmetric point and the next one are extrapolated linearly
/// in asymmetry to zero, clamped to the bracket. NoBifurcationFound if no point qualifies.
Threshold detect_threshold(const SolitonCurve& curve);

/// Bisection in omega between the last symmetric-only and first asymmetric point, re-solving
/// with the asymmetric seed, until the bracket is below omega_tol.
Threshold detect_threshold(const SolitonCurve& curve, const Potential& potential, double omega_tol,
                           const RenormOptions& opt = {});

}  // namespace dwell
