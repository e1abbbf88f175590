#include "dwell/cli.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>

#include "dwell/bifurcation.hpp"
#include "dwell/bound_states.hpp"
#include "dwell/io.hpp"
#include "dwell/pde_solver.hpp"
#include "dwell/shadowing.hpp"

namespace dwell {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string out;
  bool force = false;
  int jobs = 1;
};

struct WellOpts {
  std::string well = "delta";
  double strength = 1.0;
  double sep = 10.0;
  double xmax = 40.0;
  std::size_t points = 4096;
  double g = -1.0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "JSON file with option values (flags win)");
  sub->add_option("--out", c.out, "run directory")->capture_default_str();
  sub->add_flag("--force", c.force, "replace an earlier run in the same directory");
  sub->add_option("--jobs", c.jobs, "parallel runs for sweeps")->check(CLI::PositiveNumber);
}

void add_well(CLI::App* sub, WellOpts& w) {
  sub->add_option("--well", w.well, "delta, gauss or free")->check(CLI::IsMember({"delta", "gauss", "free"}));
  sub->add_option("--strength,--sigma", w.strength, "delta strength s, or Gaussian width sigma");
  sub->add_option("--sep", w.sep, "well separation L");
  sub->add_option("--xmax", w.xmax, "half width of the box");
  sub->add_option("--points", w.points, "grid points");
  sub->add_option("--g", w.g, "nonlinear coefficient (focusing < 0)");
}

PotentialSpec well_spec(const WellOpts& w) {
  PotentialSpec s;
  s.kind = w.well == "delta" ? WellKind::DoubleDelta : w.well == "gauss" ? WellKind::DoubleGaussian : WellKind::Free;
  s.strength = w.strength;
  s.separation = w.sep;
  return s;
}

Potential make_potential(const WellOpts& w) {
  if (w.points < 16) throw Error(ErrorKind::InvalidArgument, "need at least 16 grid points");
  if (!(w.xmax > 0.0)) throw Error(ErrorKind::InvalidArgument, "xmax must be positive");
  const PotentialSpec s = well_spec(w);
  return build_potential(s, default_grid(s, w.xmax, w.points));
}

json grid_json(const Grid& g) { return {{"x_max", g.x_max()}, {"points", g.size()}, {"dx", g.dx()}}; }

// every option of the subcommand, given or default, as text
json options_json(const CLI::App* sub) {
  json j = json::object();
  for (const CLI::Option* o : sub->get_options()) {
    const std::string name = o->get_lnames().empty() ? o->get_name() : o->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (o->count() > 0) {
      const auto& r = o->results();
      j[name] = r.size() == 1 ? json(r.front()) : json(r);
    } else if (o->get_expected_min() == 0 && o->get_default_str().empty()) {
      j[name] = "false";  // unset flag
    } else {
      j[name] = o->get_default_str();
    }
  }
  return j;
}

void write_manifest(const fs::path& dir, const CLI::App* sub, const json& resolved) {
  json m;
  m["command"] = sub->get_name();
  m["options"] = options_json(sub);
  m["resolved"] = resolved;
  io::write_json(dir / "manifest.json", m);
}

fs::path run_dir(const Common& c, const std::string& name) { return c.out.empty() ? fs::path("runs") / name : fs::path(c.out); }

// ---------------------------------------------------------------- spectrum

int cmd_spectrum(const CLI::App* sub, const Common& c, const WellOpts& w, std::ostream& out) {
  if (w.well == "free") throw Error(ErrorKind::InvalidArgument, "spectrum needs a double well");
  const Potential pot = make_potential(w);
  const SpectralData sd = compute_spectral_data(pot, w.g);
  const fs::path dir = run_dir(c, "spectrum");
  io::prepare_run_directory(dir, c.force);

  json a = json::array();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) a.push_back(sd.a(i, j, k, l));
  json s = {{"omega0", sd.omega0},
            {"omega1", sd.omega1},
            {"omega10", sd.omega10},
            {"n_cr_unit", sd.n_cr.unit},
            {"n_cr_general", sd.n_cr.general},
            {"a", a},
            {"a0000", sd.a(0, 0, 0, 0)},
            {"a1111", sd.a(1, 1, 1, 1)},
            {"a0011", sd.a(0, 0, 1, 1)},
            {"grid", grid_json(pot.grid)}};
  if (pot.delta) {
    const auto lv = solve_double_delta_levels(w.strength, w.sep);
    s["continuum_omega0"] = -lv.kappa_even * lv.kappa_even;
    if (lv.kappa_odd) s["continuum_omega1"] = -*lv.kappa_odd * *lv.kappa_odd;
  }
  io::write_json(dir / "spectral.json", s);

  io::CsvWriter csv(dir / "eigenfunctions.csv", {"x", "V", "psi0", "psi1"});
  for (std::size_t i = 0; i < pot.grid.size(); ++i)
    csv.row(std::vector<double>{pot.grid.x(i), pot.diagonal[i], sd.psi0.psi[i], sd.psi1.psi[i]});
  io::write_text(dir / "eigenfunctions.gp",
                 io::gnuplot_script("eigenfunctions.csv", "x", "psi", {{"1:3", "psi0"}, {"1:4", "psi1"}},
                                    "eigenfunctions.png"));
  write_manifest(dir, sub, {{"grid", grid_json(pot.grid)}});
  out << "omega0 " << io::format_number(sd.omega0) << " omega1 " << io::format_number(sd.omega1) << " n_cr "
      << io::format_number(sd.n_cr.general) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- phaseplane

struct PhaseOpts {
  double ncr = 0.2;
  double n = 0.05;
  double omega0 = -1.0;
  std::vector<double> eps1;
  std::vector<double> dtheta{0.0};
  int count = 8;
  double tend = 0.0;
  double dt = 0.01;
  std::size_t record_every = 10;
};

int cmd_phaseplane(const CLI::App* sub, const Common& c, const PhaseOpts& o, std::ostream& out) {
  const ReducedParams p = ReducedParams::unit(o.ncr, o.omega0);
  const double N = o.ncr + o.n;
  if (!(N > 0.0)) throw Error(ErrorKind::InvalidArgument, "n_cr + n must be positive");
  std::vector<double> eps = o.eps1;
  if (eps.empty()) {
    if (o.count < 1) throw Error(ErrorKind::InvalidArgument, "count must be positive");
    for (int k = 1; k <= o.count; ++k) eps.push_back(std::sqrt(N) * k / (o.count + 1));
  }
  std::vector<EpsilonState> starts;
  for (double d : o.dtheta)
    for (double e : eps) starts.push_back({e, d});
  PhaseScanOptions so;
  so.t_end = o.tend;
  so.dt = o.dt;
  so.record_every = o.record_every;
  const auto orbits = phase_plane_scan(o.n, p, starts, so);

  const fs::path dir = run_dir(c, "phaseplane");
  io::prepare_run_directory(dir, c.force);
  json index = json::array();
  for (std::size_t k = 0; k < orbits.size(); ++k) {
    const auto& orb = orbits[k];
    char name[32];
    std::snprintf(name, sizeof name, "orbit_%03zu.csv", k);
    io::CsvWriter csv(dir / name, {"t", "epsilon1", "dtheta"});
    for (std::size_t i = 0; i < orb.times.size(); ++i) csv.row(std::vector<double>{orb.times[i], orb.epsilon1[i], orb.dtheta[i]});
    index.push_back({{"file", name},
                     {"epsilon1_0", orb.start.epsilon1},
                     {"dtheta_0", orb.start.dtheta},
                     {"epsilon1_min", orb.epsilon1_min},
                     {"epsilon1_max", orb.epsilon1_max},
                     {"dtheta_span", orb.dtheta_span},
                     {"librating", orb.librating},
                     {"winding", orb.winding}});
  }
  json eq = json::array();
  if (o.n > 0.0)
    for (int k = 0; k < 2; ++k) eq.push_back({{"epsilon1", std::sqrt(o.n / 2.0)}, {"dtheta", k * std::numbers::pi}});
  io::write_json(dir / "index.json", {{"n_cr", o.ncr}, {"n", o.n}, {"N", N}, {"orbits", index}, {"interior_equilibria", eq}});
  std::ostringstream gp;
  gp << "set terminal pngcairo size 900,600\nset output 'phaseplane.png'\nset datafile separator ','\n"
     << "set xlabel 'epsilon1'\nset ylabel 'dtheta'\n"
     << "plot for [i=0:" << orbits.size() - 1 << "] sprintf('orbit_%03d.csv', i) every ::1 using 2:3 with lines notitle\n";
  io::write_text(dir / "phaseplane.gp", gp.str());
  write_manifest(dir, sub, {{"N", N}, {"orbits", orbits.size()}});
  out << orbits.size() << " orbits written to " << dir.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- bifurcate

struct BifOpts {
  double ncr = 0.1;
  double omega0 = -1.0;
  double nmin = 0.01;
  double nmax = 0.3;
  int count = 59;
};

int cmd_bifurcate(const CLI::App* sub, const Common& c, const BifOpts& o, std::ostream& out) {
  if (!(o.nmin > 0.0) || !(o.nmax > o.nmin) || o.count < 2)
    throw Error(ErrorKind::InvalidArgument, "need 0 < nmin < nmax and count >= 2");
  const ReducedParams p = ReducedParams::unit(o.ncr, o.omega0);
  const fs::path dir = run_dir(c, "bifurcate");
  io::prepare_run_directory(dir, c.force);

  io::CsvWriter csv(dir / "bifurcation.csv", {"N", "branch", "A", "alpha", "lambda_re", "lambda_im", "classification"});
  io::CsvWriter bar(dir / "barrier.csv", {"N", "delta_H"});
  for (int k = 0; k < o.count; ++k) {
    const double N = o.nmin + (o.nmax - o.nmin) * k / (o.count - 1);
    for (const auto& eq : equilibria(N, p)) {
      const auto lin = linearize(eq, p);
      const double lr = std::sqrt(std::max(lin.lambda_squared, 0.0));
      const double li = std::sqrt(std::max(-lin.lambda_squared, 0.0));
      csv.row(std::vector<std::string>{io::format_number(N), to_string(eq.kind), io::format_number(eq.A),
                                       io::format_number(eq.alpha), io::format_number(lr), io::format_number(li),
                                       to_string(lin.classification)});
    }
    if (N > p.n_cr()) bar.row(std::vector<double>{N, energy_barrier(N, p)});
  }
  const double flip = locate_stability_flip(o.ncr);
  io::write_json(dir / "bifurcation.json", {{"n_cr", o.ncr}, {"stability_flip", flip}, {"flip_error", std::abs(flip - o.ncr)}});
  io::write_text(dir / "barrier.gp", io::gnuplot_script("barrier.csv", "N", "delta H", {{"1:2", "barrier"}}, "barrier.png"));
  write_manifest(dir, sub, {{"stability_flip", flip}});
  out << "stability flip at N = " << io::format_number(flip) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- groundstate

struct GroundOpts {
  double omega_start = NAN;
  double omega_end = NAN;
  double step = NAN;
  double refine = 0.0;
  double tol = 1e-10;
};

int cmd_groundstate(const CLI::App* sub, const Common& c, const WellOpts& w, const GroundOpts& o, std::ostream& out) {
  if (w.well == "free") throw Error(ErrorKind::InvalidArgument, "groundstate needs a double well");
  const Potential pot = make_potential(w);
  const SpectralData sd = compute_spectral_data(pot, w.g);
  // omega scale of the pitchfork in the two-mode picture
  const double scale = sd.n_cr.general * sd.a(0, 0, 0, 0);
  const double start = std::isnan(o.omega_start) ? sd.omega0 - 0.1 * scale : o.omega_start;
  const double end = std::isnan(o.omega_end) ? sd.omega0 - 3.0 * scale : o.omega_end;
  const double step = std::isnan(o.step) ? 0.05 * scale : o.step;
  RenormOptions ro;
  ro.tol = o.tol;
  ro.g = w.g;
  const SolitonCurve curve = continue_in_omega(pot, start, end, step, {Branch::Symmetric, Branch::AsymPlus, Branch::AsymMinus}, ro);

  const fs::path dir = run_dir(c, "groundstate");
  io::prepare_run_directory(dir, c.force);
  io::CsvWriter csv(dir / "soliton_curve.csv", {"omega", "N", "asymmetry", "branch"});
  for (const auto& pt : curve.points)
    csv.row(std::vector<std::string>{io::format_number(pt.omega), io::format_number(pt.n), io::format_number(pt.asymmetry),
                                     to_string(pt.branch)});
  json th;
  try {
    const Threshold t = o.refine > 0.0 ? detect_threshold(curve, pot, o.refine, ro) : detect_threshold(curve);
    th = {{"found", true}, {"n_star", t.n_star}, {"omega_star", t.omega_star}, {"noise_floor", t.noise_floor},
          {"omega_bracket", t.omega_bracket}};
    out << "threshold N* = " << io::format_number(t.n_star) << " (two-mode n_cr " << io::format_number(sd.n_cr.general) << ")\n";
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoBifurcationFound) throw;
    th = {{"found", false}};
    out << "no symmetry-breaking bifurcation in range\n";
  }
  th["n_cr_two_mode"] = sd.n_cr.general;
  th["omega0"] = sd.omega0;
  io::write_json(dir / "threshold.json", th);
  std::ostringstream gp;
  gp << "set terminal pngcairo size 900,600\nset output 'soliton_curve.png'\nset datafile separator ','\n"
     << "set xlabel 'N'\nset ylabel 'asymmetry'\n"
     << "plot 'soliton_curve.csv' every ::1 using 2:(strcol(4) eq 'symmetric' ? $3 : 1/0) with points title 'symmetric', \\\n"
     << "     '' every ::1 using 2:(strcol(4) ne 'symmetric' ? $3 : 1/0) with points title 'asymmetric'\n";
  io::write_text(dir / "soliton_curve.gp", gp.str());
  write_manifest(dir, sub, {{"omega_start", start}, {"omega_end", end}, {"step", step}, {"grid", grid_json(pot.grid)}});
  return kExitOk;
}

// ---------------------------------------------------------------- evolve

struct EvolveOpts {
  std::string scheme = "cn";
  double dt = 1e-3;
  double tend = 1.0;
  std::string init = "psi0";
  double amp = 1.0;
  double A = 0.2;
  double alpha = 0.1;
  double beta = 0.0;
  std::size_t record_every = 100;
  std::size_t snapshot_every = 0;
  double filter_radius = 0.0;
  std::size_t filter_every = 10000;
  bool linear = false;
};

int cmd_evolve(const CLI::App* sub, const Common& c, const WellOpts& w, const EvolveOpts& o, std::ostream& out) {
  const Potential pot = make_potential(w);
  const Grid& grid = pot.grid;
  FieldState u0{grid, ComplexField(grid.size()), 0.0};
  if (o.init == "sech") {
    for (std::size_t i = 0; i < grid.size(); ++i)
      u0.values[i] = o.amp * std::numbers::sqrt2 / std::cosh(o.amp * grid.x(i));
    u0.values[0] = 0.0;
  } else if (o.init == "psi0" || o.init == "twomode") {
    if (w.well == "free") throw Error(ErrorKind::InvalidArgument, "mode data needs a double well");
    const SpectralData sd = compute_spectral_data(pot, w.g);
    if (o.init == "psi0") {
      for (std::size_t i = 0; i < grid.size(); ++i) u0.values[i] = o.amp * sd.psi0.psi[i];
    } else {
      u0 = build_initial_data({o.A, o.alpha, o.beta, 0.0}, sd);
    }
  }
  EvolveParams ep;
  ep.dt = o.dt;
  ep.t_end = o.tend;
  ep.scheme = o.scheme == "cn" ? Scheme::CrankNicolson : Scheme::SplitStepFourier;
  ep.record_every = o.record_every;
  ep.snapshot_every = o.snapshot_every;
  ep.g = w.g;
  ep.nonlinear = !o.linear;
  if (o.filter_radius > 0.0) ep.tail_filter = TailFilter{o.filter_every, o.filter_radius};
  const EvolveResult r = evolve(u0, ep, pot);

  const fs::path dir = run_dir(c, "evolve");
  io::prepare_run_directory(dir, c.force);
  io::CsvWriter d(dir / "diagnostics.csv", {"t", "mass", "hamiltonian", "center_of_mass", "max_amplitude", "max_location"});
  double mass_drift = 0.0, h_drift = 0.0;
  for (const auto& x : r.diagnostics) {
    d.row(std::vector<double>{x.time, x.mass, x.hamiltonian, x.center_of_mass, x.max_amplitude, x.max_location});
    mass_drift = std::max(mass_drift, std::abs(x.mass - r.diagnostics.front().mass));
    h_drift = std::max(h_drift, std::abs(x.hamiltonian - r.diagnostics.front().hamiltonian));
  }
  io::CsvWriter snaps(dir / "snapshots.csv", {"t", "x", "re", "im", "abs"});
  for (const auto& s : r.snapshots)
    for (std::size_t i = 0; i < grid.size(); ++i)
      snaps.row(std::vector<double>{s.time, grid.x(i), s.values[i].real(), s.values[i].imag(), std::abs(s.values[i])});
  io::CsvWriter fin(dir / "final_state.csv", {"x", "re", "im", "abs"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const cplx v = r.final_state.values[i];
    fin.row(std::vector<double>{grid.x(i), v.real(), v.imag(), std::abs(v)});
  }
  io::write_json(dir / "summary.json", {{"steps", r.steps},
                                        {"t_end", r.final_state.time},
                                        {"scheme", to_string(ep.scheme)},
                                        {"mass_drift", mass_drift},
                                        {"hamiltonian_drift", h_drift},
                                        {"removed_mass", r.removed_mass},
                                        {"filter_events", r.filter_events}});
  io::write_text(dir / "diagnostics.gp", io::gnuplot_script("diagnostics.csv", "t", "value",
                                                            {{"1:2", "mass"}, {"1:4", "center of mass"}}, "diagnostics.png"));
  write_manifest(dir, sub, {{"grid", grid_json(grid)}, {"scheme", to_string(ep.scheme)}});
  out << r.steps << " steps, mass drift " << io::format_number(mass_drift) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- shadow

struct ShadowOpts {
  std::string side = "above";
  double tau = 0.05;
  double gamma = 0.0;
  double ncr = 0.1;
  double strength = 1.0;
  double xmax = 40.0;
  std::size_t points = 4096;
  double periods = 5.0;
  double epsilon = 0.1;
  double delta = 0.1;
  double delta1 = 0.1;
  double verdict_constant = 5.0;
  double annulus_limit = 0.2;
  double amplitude = 0.0;
  double eps1 = 0.0;
  double dtheta = 0.0;
  double theta0 = 0.0;
  double dt = 0.05;
  std::size_t samples = 64;
  bool strict = false;
  int ladder = 0;
};

json report_json(const ShadowReport& r) {
  return {{"N", r.n},
          {"n_cr", r.n_cr},
          {"tau", r.tau},
          {"period", r.period},
          {"horizon", r.horizon},
          {"amplitude", r.amplitude},
          {"start", {{"A", r.start.A}, {"alpha", r.start.alpha}, {"beta", r.start.beta}, {"theta", r.start.theta}}},
          {"sup_eta", r.sup_eta},
          {"eta_bound", r.eta_bound},
          {"eta_ok", r.eta_ok},
          {"eta0", r.eta0},
          {"w_h1_sup", r.w_norms.h1_sup},
          {"w_l4_linf", r.w_norms.l4_linf},
          {"tilde_r_sup", r.tilde_r_sup},
          {"source_defect", r.source_defect},
          {"projection_defect", r.projection_defect},
          {"annulus_width", r.annulus_width},
          {"annulus_ok", r.annulus_ok},
          {"center_of_mass_sign_changes", r.com_sign_changes},
          {"mass_drift", r.mass_drift},
          {"hamiltonian_drift", r.h_drift},
          {"truncated", r.truncated},
          {"truncation_reason", r.truncation_reason}};
}

void write_report(const fs::path& dir, const ShadowReport& r) {
  io::write_json(dir / "shadow_report.json", report_json(r));
  io::CsvWriter csv(dir / "shadow_series.csv",
                    {"t", "eta_A", "eta_alpha", "eta_beta", "alpha_pde", "beta_pde", "alpha_ref", "beta_ref", "N", "H",
                     "x_com", "w_sup", "tilde_r_sup"});
  for (std::size_t k = 0; k < r.times.size(); ++k)
    csv.row(std::vector<double>{r.times[k], r.eta_A[k], r.eta_alpha[k], r.eta_beta[k], r.alpha_pde[k], r.beta_pde[k],
                                r.alpha_ref[k], r.beta_ref[k], r.mass[k], r.hamiltonian[k], r.center_of_mass[k],
                                r.w_sup[k], r.tilde_r_sup_series[k]});
  io::write_text(dir / "shadow_orbit.gp", io::gnuplot_script("shadow_series.csv", "alpha", "beta",
                                                             {{"5:6", "PDE"}, {"7:8", "reduced"}}, "shadow_orbit.png"));
  io::write_text(dir / "shadow_eta.gp",
                 io::gnuplot_script("shadow_series.csv", "t", "eta",
                                    {{"1:2", "eta_A"}, {"1:3", "eta_alpha"}, {"1:4", "eta_beta"}}, "shadow_eta.png"));
}

bool verdicts_pass(const ShadowReport& r) { return r.eta_ok && r.annulus_ok && !r.truncated; }

int cmd_shadow(const CLI::App* sub, const Common& c, const ShadowOpts& o, std::ostream& out) {
  ShadowParams sp;
  sp.tau = o.tau;
  if (sub->get_option("--gamma")->count() > 0) sp.gamma = o.gamma;
  sp.delta1 = o.delta1;
  sp.delta = o.delta;
  sp.epsilon = o.epsilon;
  sp.periods = o.periods;
  sp.verdict_constant = o.verdict_constant;
  sp.annulus_limit = o.annulus_limit;
  sp.validate();
  OrbitSpec os;
  os.side = o.side == "above" ? Side::Above : Side::Below;
  if (sub->get_option("--amplitude")->count() > 0) os.amplitude = o.amplitude;
  if (sub->get_option("--eps1")->count() > 0) os.epsilon1 = o.eps1;
  os.dtheta = o.dtheta;
  os.theta0 = o.theta0;
  ShadowOptions so;
  so.dt = o.dt;
  so.samples_per_period = o.samples;
  so.strict = o.strict;

  const fs::path dir = run_dir(c, "shadow");
  if (o.ladder > 0) {
    const LadderResult lr = run_tau_ladder(sp, os, o.ladder, so, c.jobs);
    io::prepare_run_directory(dir, c.force);
    json rungs = json::array();
    bool ok = lr.monotone && lr.eta_slope >= 0.5;
    for (std::size_t k = 0; k < lr.points.size(); ++k) {
      const auto& pt = lr.points[k];
      const fs::path rd = dir / ("rung_" + std::to_string(k));
      fs::create_directories(rd);
      write_report(rd, pt.report);
      rungs.push_back({{"tau", pt.tau}, {"separation", pt.separation}, {"n_cr", pt.n_cr}, {"report", report_json(pt.report)}});
      ok = ok && verdicts_pass(pt.report);
    }
    io::write_json(dir / "ladder.json", {{"rungs", rungs},
                                         {"eta_slope", lr.eta_slope},
                                         {"tilde_r_slope", lr.tilde_r_slope},
                                         {"w_h1_slope", lr.w_h1_slope},
                                         {"w_l4_slope", lr.w_l4_slope},
                                         {"monotone", lr.monotone}});
    write_manifest(dir, sub, {{"rungs", o.ladder}});
    out << "ladder eta slope " << io::format_number(lr.eta_slope) << (lr.monotone ? " monotone" : " not monotone") << "\n";
    return ok ? kExitOk : kExitVerdict;
  }

  const double ncr = sp.gamma ? std::pow(sp.tau, *sp.gamma) : o.ncr;
  const double L = separation_for_critical_power(ncr, o.strength, o.xmax, o.points);
  PotentialSpec spec{WellKind::DoubleDelta, o.strength, L};
  const SpectralData sd = compute_spectral_data(build_potential(spec, default_grid(spec, o.xmax, o.points)));
  const ShadowReport r = run_shadow_experiment(sp, sd, os, so);
  io::prepare_run_directory(dir, c.force);
  write_report(dir, r);
  write_manifest(dir, sub, {{"n_cr", ncr}, {"separation", L}, {"grid", grid_json(sd.grid())}});
  out << "sup eta " << io::format_number(r.sup_eta) << " (bound " << io::format_number(r.eta_bound) << "), annulus "
      << io::format_number(r.annulus_width) << "\n";
  return verdicts_pass(r) ? kExitOk : kExitVerdict;
}

// JSON config values become command-line tokens placed before the user's own flags; options
// the user gave explicitly are skipped so the command line wins.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  std::string path;
  for (std::size_t i = 2; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot read config " + path);
  const json cfg = json::parse(in);
  if (!cfg.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
  auto given = [&](const std::string& key) {
    for (std::size_t i = 2; i < args.size(); ++i)
      if (args[i] == "--" + key || args[i].rfind("--" + key + "=", 0) == 0) return true;
    return false;
  };
  auto text = [](const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return io::format_number(v.get<double>());
    return v.dump();
  };
  std::vector<std::string> merged{args[0], args[1]};
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    if (it.key() == "config" || given(it.key())) continue;
    const json& v = it.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) merged.push_back("--" + it.key());
    } else if (v.is_array()) {
      merged.push_back("--" + it.key());
      for (const auto& e : v) merged.push_back(text(e));
    } else {
      merged.push_back("--" + it.key());
      merged.push_back(text(v));
    }
  }
  merged.insert(merged.end(), args.begin() + 2, args.end());
  return merged;
}

}  // namespace

int run_cli(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-mode reduction and NLS double-well experiments", "dwell"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  Common common;
  WellOpts well;
  PhaseOpts phase;
  BifOpts bif;
  GroundOpts ground;
  EvolveOpts ev;
  ShadowOpts sh;

  auto* spectrum = app.add_subcommand("spectrum", "linear eigenpairs, overlap tensor and critical power");
  add_common(spectrum, common);
  add_well(spectrum, well);

  auto* phaseplane = app.add_subcommand("phaseplane", "orbits of the reduced polar system");
  add_common(phaseplane, common);
  phaseplane->add_option("--ncr", phase.ncr, "critical power");
  phaseplane->add_option("--n", phase.n, "power offset N - n_cr");
  phaseplane->add_option("--omega0", phase.omega0, "linear ground-state energy");
  phaseplane->add_option("--eps1", phase.eps1, "initial epsilon1 values");
  phaseplane->add_option("--dtheta", phase.dtheta, "initial phase differences");
  phaseplane->add_option("--count", phase.count, "number of evenly spaced epsilon1 starts when --eps1 is absent");
  phaseplane->add_option("--tend", phase.tend, "integration time (0: four linear periods)");
  phaseplane->add_option("--dt", phase.dt, "implicit midpoint step");
  phaseplane->add_option("--record-every", phase.record_every, "steps between samples");

  auto* bifurcate = app.add_subcommand("bifurcate", "equilibria, stability and energy barrier versus N");
  add_common(bifurcate, common);
  bifurcate->add_option("--ncr", bif.ncr, "critical power");
  bifurcate->add_option("--omega0", bif.omega0, "linear ground-state energy");
  bifurcate->add_option("--nmin", bif.nmin, "smallest power");
  bifurcate->add_option("--nmax", bif.nmax, "largest power");
  bifurcate->add_option("--count", bif.count, "number of powers");

  auto* groundstate = app.add_subcommand("groundstate", "nonlinear bound states by spectral renormalization");
  add_common(groundstate, common);
  add_well(groundstate, well);
  groundstate->add_option("--omega-start", ground.omega_start, "first frequency (default omega0 - 0.1 scale)");
  groundstate->add_option("--omega-end", ground.omega_end, "last frequency (default omega0 - 3 scale)");
  groundstate->add_option("--step", ground.step, "frequency decrement (default 0.05 scale)");
  groundstate->add_option("--refine", ground.refine, "bisection tolerance in omega for the threshold (0: off)");
  groundstate->add_option("--tol", ground.tol, "renormalization tolerance");

  auto* evolve_cmd = app.add_subcommand("evolve", "time-dependent NLS run");
  add_common(evolve_cmd, common);
  add_well(evolve_cmd, well);
  evolve_cmd->add_option("--scheme", ev.scheme, "cn or split-step")->check(CLI::IsMember({"cn", "split-step"}));
  evolve_cmd->add_option("--dt", ev.dt, "time step");
  evolve_cmd->add_option("--tend", ev.tend, "final time");
  evolve_cmd->add_option("--init", ev.init, "psi0, twomode, sech or zero")
      ->check(CLI::IsMember({"psi0", "twomode", "sech", "zero"}));
  evolve_cmd->add_option("--amp", ev.amp, "amplitude for psi0, inverse width for sech");
  evolve_cmd->add_option("--A", ev.A, "two-mode A");
  evolve_cmd->add_option("--alpha", ev.alpha, "two-mode alpha");
  evolve_cmd->add_option("--beta", ev.beta, "two-mode beta");
  evolve_cmd->add_option("--record-every", ev.record_every, "steps between diagnostics");
  evolve_cmd->add_option("--snapshot-every", ev.snapshot_every, "steps between snapshots (0: first and last)");
  evolve_cmd->add_option("--filter-radius", ev.filter_radius, "tail filter radius (0: off)");
  evolve_cmd->add_option("--filter-every", ev.filter_every, "steps between tail filter passes");
  evolve_cmd->add_flag("--linear", ev.linear, "drop the nonlinear term");

  auto* shadow = app.add_subcommand("shadow", "PDE against the reduced orbit on a double-delta well");
  add_common(shadow, common);
  shadow->add_option("--side", sh.side, "above or below the critical power")->check(CLI::IsMember({"above", "below"}));
  shadow->add_option("--tau", sh.tau, "|N - n_cr|");
  shadow->add_option("--gamma", sh.gamma, "n_cr = tau^gamma (7/9 < gamma < 1)");
  shadow->add_option("--ncr", sh.ncr, "critical power when --gamma is absent");
  shadow->add_option("--strength", sh.strength, "delta strength");
  shadow->add_option("--xmax", sh.xmax, "half width of the box");
  shadow->add_option("--points", sh.points, "grid points");
  shadow->add_option("--periods", sh.periods, "minimum number of reduced periods");
  shadow->add_option("--epsilon", sh.epsilon, "horizon exponent, tau^-epsilon periods");
  shadow->add_option("--delta", sh.delta, "orbit amplitude exponent below threshold");
  shadow->add_option("--delta1", sh.delta1, "deviation exponent of the eta verdict");
  shadow->add_option("--verdict-constant", sh.verdict_constant, "C in sup eta <= C tau^(1/2+delta1)");
  shadow->add_option("--annulus-limit", sh.annulus_limit, "largest accepted relative annulus width");
  shadow->add_option("--amplitude", sh.amplitude, "signed alpha offset from the center");
  shadow->add_option("--eps1", sh.eps1, "polar start radius instead of an offset");
  shadow->add_option("--dtheta", sh.dtheta, "polar start phase difference");
  shadow->add_option("--theta0", sh.theta0, "global phase of the initial data");
  shadow->add_option("--dt", sh.dt, "PDE time step");
  shadow->add_option("--samples", sh.samples, "samples per reduced period");
  shadow->add_flag("--strict", sh.strict, "fail instead of reporting a truncated run");
  shadow->add_option("--ladder", sh.ladder, "run a tau ladder with this many rungs (needs --gamma)");

  std::vector<std::string> args;
  try {
    args = merge_config(args_in);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (spectrum->parsed()) return cmd_spectrum(spectrum, common, well, out);
    if (phaseplane->parsed()) return cmd_phaseplane(phaseplane, common, phase, out);
    if (bifurcate->parsed()) return cmd_bifurcate(bifurcate, common, bif, out);
    if (groundstate->parsed()) return cmd_groundstate(groundstate, common, well, ground, out);
    if (evolve_cmd->parsed()) return cmd_evolve(evolve_cmd, common, well, ev, out);
    if (shadow->parsed()) return cmd_shadow(shadow, common, sh, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::GridMismatch ? kExitConfig : kExitNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace dwell
