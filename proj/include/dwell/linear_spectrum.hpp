#pragma once

#include <array>
#include <optional>
#include <vector>

#include "dwell/core.hpp"

namespace dwell {

enum class WellKind { DoubleDelta, DoubleGaussian, Free };

/// Symmetric double well.
///   DoubleDelta:    V = -s [delta(x - L/2) + delta(x + L/2)], strength = s.
///   DoubleGaussian: V = -(4 pi sigma^2)^{-1/2} [e^{-(x-L)^2/4sigma^2} + e^{-(x+L)^2/4sigma^2}],
///                   strength = sigma.
///   Free:           V = 0 (no bound states; used for constant-coefficient runs).
struct PotentialSpec {
  WellKind kind = WellKind::DoubleDelta;
  double strength = 1.0;
  double separation = 10.0;

  /// Distance of each well center from the origin.
  double well_offset() const;
  /// Length over which the bound states (delta) or the wells (Gaussian) decay.
  double decay_length() const;
  double evaluate(double x) const;  // smooth part only; 0 for deltas
};

struct DeltaDescriptor {
  double location = 0.0;  // wells at +-location
  double strength = 0.0;
};

/// Potential sampled on a grid. `diagonal` is what the finite-difference
/// operator sees: the smooth samples plus -s/dx at the delta nodes (split
/// linearly between the two neighbours when a well falls between nodes).
struct Potential {
  PotentialSpec spec;
  Grid grid;
  RealField samples;
  RealField diagonal;
  std::optional<DeltaDescriptor> delta;

  bool smooth() const { return !delta.has_value(); }
};

Potential build_potential(const PotentialSpec& spec, const Grid& grid);
Potential free_potential(const Grid& grid);

/// [-40, 40] with 2^12 points, shifted outwards if needed so that delta wells sit on nodes.
Grid default_grid(const PotentialSpec& spec, double x_max = 40.0, std::size_t n_points = 4096);

struct DeltaLevels {
  double kappa_even = 0.0;
  std::optional<double> kappa_odd;
};

/// Roots of kappa = (s/2)(1 +- e^{-kappa L}). Throws OddStateAbsent when sL <= 2.
DeltaLevels solve_double_delta_levels(double s, double L);

/// Continuum double-delta eigenfunction sampled on a grid, L2-normalized in the continuum
/// (cosh or sinh between the wells, exponential tails outside).
RealField double_delta_mode(double s, double L, const Grid& grid, bool even = true);

struct EigenPair {
  double eigenvalue = 0.0;
  RealField psi;
};

/// Lowest `count` (1 or 2) Dirichlet eigenpairs of the finite-difference H = -d2/dx2 + V.
/// psi0 is even with positive mass, psi1 odd and positive for x > 0.
std::vector<EigenPair> compute_eigenpairs(const Potential& potential, int count = 2);

/// Number of eigenvalues of the finite-difference H strictly below lambda.
std::size_t count_below(const Potential& potential, double lambda);

/// Apply the finite-difference H to a field with homogeneous Dirichlet ends.
void apply_h(const Potential& potential, std::span<const double> u, std::span<double> out);
void apply_h(const Potential& potential, std::span<const cplx> u, std::span<cplx> out);

/// a_ijkl = int psi_i psi_j psi_k psi_l, flattened with index ((i*2+j)*2+k)*2+l.
struct OverlapTensor {
  std::array<double, 16> a{};

  double operator()(int i, int j, int k, int l) const { return a[((i * 2 + j) * 2 + k) * 2 + l]; }
  static OverlapTensor unit();
};

OverlapTensor overlap_coefficients(const Grid& grid, std::span<const double> psi0,
                                   std::span<const double> psi1);

struct CriticalPower {
  double unit = 0.0;     // Omega10 / 2
  double general = 0.0;  // Omega10 / (g (a0000 - 3 a0011))
};

CriticalPower critical_power(double omega10, const OverlapTensor& a, double g = -1.0);

struct SpectralData {
  Potential potential;
  double omega0 = 0.0;
  double omega1 = 0.0;
  double omega10 = 0.0;
  EigenPair psi0;
  EigenPair psi1;
  OverlapTensor a;
  CriticalPower n_cr;
  double g = -1.0;

  const Grid& grid() const { return potential.grid; }
};

SpectralData compute_spectral_data(const Potential& potential, double g = -1.0);

}  // namespace dwell
