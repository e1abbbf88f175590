#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwell {

using cplx = std::complex<double>;
using RealField = std::vector<double>;
using ComplexField = std::vector<cplx>;

/// Failure categories raised by the numerical modules. The CLI maps these
/// onto exit codes, tests match on them.
enum class ErrorKind {
  InvalidArgument,
  OddStateAbsent,
  DomainTooSmall,
  ConvergenceFailure,
  GridMismatch,
  DegenerateDenominator,
  ChartBreakdown,
  StepFailure,
  NoCrossing,
  InvalidEquilibrium,
  SaddleCase,
  NotPeriodic,
  BelowThreshold,
  NonlinearIterationDiverged,
  IterationDiverged,
  ConvergedToZero,
  BranchLost,
  NoBifurcationFound,
  HorizonTruncated,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Uniform grid on [-x_max, x_max) with n_points nodes. Node i sits at
/// x_min + i*dx, so node n/2 is the origin and node n-i mirrors node i.
/// Node 0 doubles as the Dirichlet boundary for the finite-difference
/// operators; the periodic image of x_max is not stored.
class Grid {
 public:
  Grid() = default;
  Grid(double x_max, std::size_t n_points);

  double x_min() const { return -x_max_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return n_; }
  double dx() const { return dx_; }
  double x(std::size_t i) const { return -x_max_ + static_cast<double>(i) * dx_; }
  std::vector<double> nodes() const;

  /// Index of the mirror node of i (x -> -x); node 0 has no mirror.
  std::size_t mirror(std::size_t i) const { return n_ - i; }

  /// Grid with at least `x_max_min` half-width and the same point count whose
  /// node set contains +-offset exactly.
  static Grid aligned(double x_max_min, std::size_t n_points, double offset);

  bool operator==(const Grid& other) const {
    return n_ == other.n_ && x_max_ == other.x_max_;
  }

 private:
  double x_max_ = 0.0;
  std::size_t n_ = 0;
  double dx_ = 0.0;
};

// Trapezoid quadrature on the grid. All fields vanish (Dirichlet) or repeat
// (periodic) at the ends, so the rule reduces to dx * sum.
double integrate(const Grid& grid, std::span<const double> f);
cplx integrate(const Grid& grid, std::span<const cplx> f);

/// Real L2 pairing int f g dx for real fields.
double inner(const Grid& grid, std::span<const double> f, std::span<const double> g);
/// int psi * u dx for a real mode psi and complex field u.
cplx project_onto(const Grid& grid, std::span<const double> psi, std::span<const cplx> u);

double mass(const Grid& grid, std::span<const cplx> u);
double sup_norm(std::span<const cplx> u);
double sup_norm(std::span<const double> u);

void require_same_size(const Grid& grid, std::size_t n, const char* what);

}  // namespace dwell
