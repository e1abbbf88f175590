#include "dwell/core.hpp"

#include <algorithm>
#include <cmath>

namespace dwell {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::OddStateAbsent: return "odd state absent";
    case ErrorKind::DomainTooSmall: return "domain too small";
    case ErrorKind::ConvergenceFailure: return "convergence failure";
    case ErrorKind::GridMismatch: return "grid mismatch";
    case ErrorKind::DegenerateDenominator: return "degenerate denominator";
    case ErrorKind::ChartBreakdown: return "chart breakdown";
    case ErrorKind::StepFailure: return "step failure";
    case ErrorKind::NoCrossing: return "no crossing";
    case ErrorKind::InvalidEquilibrium: return "invalid equilibrium";
    case ErrorKind::SaddleCase: return "saddle case";
    case ErrorKind::NotPeriodic: return "not periodic";
    case ErrorKind::BelowThreshold: return "below threshold";
    case ErrorKind::NonlinearIterationDiverged: return "nonlinear iteration diverged";
    case ErrorKind::IterationDiverged: return "iteration diverged";
    case ErrorKind::ConvergedToZero: return "converged to zero";
    case ErrorKind::BranchLost: return "branch lost";
    case ErrorKind::NoBifurcationFound: return "no bifurcation found";
    case ErrorKind::HorizonTruncated: return "horizon truncated";
  }
  return "unknown";
}

Grid::Grid(double x_max, std::size_t n_points) : x_max_(x_max), n_(n_points) {
  if (!(x_max > 0.0) || n_points < 8 || (n_points & (n_points - 1)) != 0)
    throw Error(ErrorKind::InvalidArgument,
                "grid needs x_max > 0 and a power-of-two point count >= 8");
  dx_ = 2.0 * x_max_ / static_cast<double>(n_);
}

std::vector<double> Grid::nodes() const {
  std::vector<double> xs(n_);
  for (std::size_t i = 0; i < n_; ++i) xs[i] = x(i);
  return xs;
}

Grid Grid::aligned(double x_max_min, std::size_t n_points, double offset) {
  // offset must be an integer multiple of dx = 2 x_max / n; shrink the cell
  // count so dx (and with it x_max) only grows.
  Grid g(x_max_min, n_points);
  if (offset <= 0.0) return g;
  double cells = std::floor(offset / g.dx() + 1e-9);
  if (cells < 1.0) throw Error(ErrorKind::DomainTooSmall, "cannot align grid to well offset");
  double dx = offset / cells;
  return Grid(dx * static_cast<double>(n_points) / 2.0, n_points);
}

void require_same_size(const Grid& grid, std::size_t n, const char* what) {
  if (n != grid.size())
    throw Error(ErrorKind::GridMismatch, std::string(what) + ": field size does not match grid");
}

double integrate(const Grid& grid, std::span<const double> f) {
  require_same_size(grid, f.size(), "integrate");
  double s = 0.0;
  for (double v : f) s += v;
  return s * grid.dx();
}

cplx integrate(const Grid& grid, std::span<const cplx> f) {
  require_same_size(grid, f.size(), "integrate");
  cplx s = 0.0;
  for (const cplx& v : f) s += v;
  return s * grid.dx();
}

double inner(const Grid& grid, std::span<const double> f, std::span<const double> g) {
  require_same_size(grid, f.size(), "inner");
  require_same_size(grid, g.size(), "inner");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return s * grid.dx();
}

cplx project_onto(const Grid& grid, std::span<const double> psi, std::span<const cplx> u) {
  require_same_size(grid, psi.size(), "project");
  require_same_size(grid, u.size(), "project");
  cplx s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += psi[i] * u[i];
  return s * grid.dx();
}

double mass(const Grid& grid, std::span<const cplx> u) {
  require_same_size(grid, u.size(), "mass");
  double s = 0.0;
  for (const cplx& v : u) s += std::norm(v);
  return s * grid.dx();
}

double sup_norm(std::span<const cplx> u) {
  double m = 0.0;
  for (const cplx& v : u) m = std::max(m, std::abs(v));
  return m;
}

double sup_norm(std::span<const double> u) {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace dwell
