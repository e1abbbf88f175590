#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "dwell/core.hpp"
#include "dwell/linear_spectrum.hpp"

namespace dwell {

struct FieldState {
  Grid grid;
  ComplexField values;
  double time = 0.0;
};

enum class Scheme { SplitStepFourier, CrankNicolson };

const char* to_string(Scheme s) noexcept;

struct TailFilter {
  std::size_t trigger_step_count = 10000;
  double cutoff_radius = 30.0;  // use 0.75 * x_max when building from a grid

  static TailFilter defaults(const Grid& grid) { return {10000, 0.75 * grid.x_max()}; }
};

struct EvolveParams {
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::CrankNicolson;
  std::optional<TailFilter> tail_filter;
  std::size_t record_every = 100;
  std::size_t snapshot_every = 0;  // 0: initial and final state only
  double g = -1.0;
  bool nonlinear = true;
};

struct PdeDiagnostics {
  double time = 0.0;
  double mass = 0.0;
  double hamiltonian = 0.0;
  double center_of_mass = 0.0;
  double max_amplitude = 0.0;
  double max_location = 0.0;
};

struct EvolveResult {
  FieldState final_state;
  std::vector<PdeDiagnostics> diagnostics;
  std::vector<FieldState> snapshots;
  double removed_mass = 0.0;
  std::size_t filter_events = 0;
  std::size_t steps = 0;
};

/// Strang split-step Fourier on the periodic box [x_min, x_max). Holds an FFTW plan;
/// instances are not shared between threads.
class SplitStepStepper {
 public:
  SplitStepStepper(const Potential& potential, double dt, double g = -1.0, bool nonlinear = true);
  ~SplitStepStepper();
  SplitStepStepper(const SplitStepStepper&) = delete;
  SplitStepStepper& operator=(const SplitStepStepper&) = delete;

  void step(ComplexField& u);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Crank-Nicolson on the finite-difference H with Dirichlet ends. The nonlinear
/// potential is taken at the midpoint |(u^n + u^{n+1})/2|^2 and resolved by fixed-point
/// sweeps (at least two, tolerance 1e-12, NonlinearIterationDiverged after 25).
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const Potential& potential, double dt, double g = -1.0, bool nonlinear = true);

  void step(ComplexField& u);
  int last_sweeps() const { return last_sweeps_; }

 private:
  const Potential* potential_;
  double dt_, g_;
  bool nonlinear_;
  int last_sweeps_ = 0;
  ComplexField rhs_, next_, prev_, sub_, diag_, sup_, work_;
  RealField w_;
};

FieldState step_splitstep(const FieldState& state, double dt, const Potential& potential, double g = -1.0,
                          bool nonlinear = true);
FieldState step_crank_nicolson(const FieldState& state, double dt, const Potential& potential, double g = -1.0,
                               bool nonlinear = true);

EvolveResult evolve(const FieldState& state0, const EvolveParams& params, const Potential& potential);

enum class Gradient { Staggered, Spectral };

/// H[u] = int |u_x|^2 + V|u|^2 + (g/2)|u|^4. Staggered differences match the CN operator
/// exactly; Spectral uses the Fourier derivative of the periodic box.
double hamiltonian(const FieldState& state, const Potential& potential, double g = -1.0,
                   Gradient gradient = Gradient::Staggered);

PdeDiagnostics diagnostics(const FieldState& state, const Potential& potential, double g = -1.0,
                           Gradient gradient = Gradient::Staggered);

/// Zero the field for |x| > radius; returns the removed mass.
double apply_tail_filter(FieldState& state, double radius);

}  // namespace dwell
