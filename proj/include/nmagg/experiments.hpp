#pragma once

#include "diagnostics.hpp"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace nmagg {

enum class ExperimentKind { single_run, eta_r_sweep, kappa_sweep };
enum class InterfaceKind { nonlocal, local };
enum class InitialRecipe { spinodal, smooth, quiescent, taylor_green };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
  case ExperimentKind::single_run: return "single_run";
  case ExperimentKind::eta_r_sweep: return "eta_r_sweep";
  case ExperimentKind::kappa_sweep: return "kappa_sweep";
  }
  return "?";
}
inline const char* to_string(InterfaceKind k) { return k == InterfaceKind::nonlocal ? "nonlocal" : "local"; }
inline const char* to_string(InitialRecipe r) {
  switch (r) {
  case InitialRecipe::spinodal: return "spinodal";
  case InitialRecipe::smooth: return "smooth";
  case InitialRecipe::quiescent: return "quiescent";
  case InitialRecipe::taylor_green: return "taylor_green";
  }
  return "?";
}

struct KernelInputs {
  KernelFamily family = KernelFamily::disk_profile;
  double kappa = 0.125;
  InterfaceKind op = InterfaceKind::nonlocal;
  RadialProfile profile;
};

struct GridSpec {
  std::size_t n = 256;
  double length = 1.0;
};

struct InitialData {
  InitialRecipe recipe = InitialRecipe::spinodal;
  double m0 = 0.0;
  double amplitude = 0.05;
  double delta0 = 0.1;
  /// L2 norm of u0 (random and smooth recipes), peak amplitude for taylor_green.
  double u_norm = 0.1;
  double omega0 = 0.0;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::single_run;
  PhysParams phys;
  PotentialSpec pot;
  KernelInputs kernel;
  SchemeConfig scheme;
  GridSpec grid;
  double t_final = 0.25;
  /// eta_r values (eta_r_sweep) or kappa values (kappa_sweep), strictly decreasing.
  std::vector<double> sweep;
  /// Optional density-mismatch grid for eta_r_sweep: |rho1 - rho2| values and
  /// the eta_r values paired with them.
  std::vector<double> mismatch;
  std::vector<double> mismatch_eta_r;
  InitialData init;
  std::uint64_t seed = 42;
  int snapshot_every = 10;
  int threads = 1;

  long step_count() const {
    return static_cast<long>(std::llround(t_final / scheme.dt));
  }
};

/// Gate checks shared by the config loader and the drivers. Messages start
/// with "<section>.<gate>:".
inline void validate_spec(const ExperimentSpec& s) {
  auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  try {
    s.phys.validate();
  } catch (const ParameterError& e) {
    fail(std::string("physics.range: ") + e.what());
  }
  if (!(s.pot.theta > 0.0) || !(s.pot.theta < s.pot.theta_c)) {
    std::ostringstream os;
    os << "potential.theta: require 0 < theta < theta_c, got theta = " << s.pot.theta
       << ", theta_c = " << s.pot.theta_c;
    fail(os.str());
  }
  if (s.pot.reg_epsilon) {
    try {
      s.pot.validate_regularization();
    } catch (const ParameterError& e) {
      fail(std::string("potential.regularization: ") + e.what());
    }
  }
  if (s.grid.n < 8 || s.grid.n % 2 != 0) fail("grid.n: n must be an even integer >= 8");
  if (!(s.grid.length > 0.0)) fail("grid.L: period length must be positive");
  try {
    s.scheme.validate(s.phys);
  } catch (const ParameterError& e) {
    fail(std::string("scheme.range: ") + e.what());
  }
  if (!(s.t_final > 0.0)) fail("experiment.t_final: T must be positive");
  if (s.step_count() < 1) fail("experiment.t_final: T shorter than one step");
  if (s.snapshot_every < 1) fail("output.snapshot_every: must be >= 1");
  if (s.threads < 1) fail("output.threads: must be >= 1");
  if (!(s.init.delta0 > 0.0 && s.init.delta0 < 1.0)) fail("experiment.delta0: must lie in (0, 1)");
  if (!(std::abs(s.init.m0) < 1.0 - s.init.delta0)) fail("experiment.m0: |m0| must be below 1 - delta0");
  if (s.kind != ExperimentKind::single_run) {
    if (s.sweep.empty()) fail("experiment.sweep: sweep list must be nonempty");
    for (std::size_t i = 1; i < s.sweep.size(); ++i)
      if (!(s.sweep[i] < s.sweep[i - 1])) fail("experiment.sweep: sweep list must be strictly decreasing");
  }
  if (s.mismatch.size() != 0 && s.mismatch_eta_r.empty())
    fail("experiment.mismatch_eta_r: needed together with mismatch");

  auto check_kernel = [&](double kappa) {
    const double h = s.grid.length / static_cast<double>(s.grid.n);
    const double support = std::min(1.0, 0.5 * s.grid.length);
    if (!(kappa > 0.0) || kappa >= support) {
      std::ostringstream os;
      os << "kernel.support: kappa = " << kappa << " outside (0, min(1, L/2)) = (0, " << support << ")";
      fail(os.str());
    }
    if (kappa < 4.0 * h) {
      std::ostringstream os;
      os << "kernel.resolution: kappa = " << kappa << " is below the 4-cell floor 4 L/n = " << 4.0 * h;
      fail(os.str());
    }
    const GridPtr grid = TorusGrid::create(s.grid.n, s.grid.length);
    const KernelSpec kernel = build_kernel(s.kernel.family, kappa, grid, s.kernel.profile);
    try {
      check_coercivity(s.pot, s.phys.eps_int * s.phys.eps_int * kernel.a_const());
    } catch (const CoercivityError& e) {
      fail(e.what());
    }
  };
  if (s.kernel.family == KernelFamily::custom_profile && s.kernel.profile.samples.size() < 2)
    fail("kernel.profile: custom profile needs at least two samples");
  if (s.kind == ExperimentKind::kappa_sweep) {
    // Rows below the resolution floor are reported as unresolved, not rejected.
  } else if (s.kernel.op == InterfaceKind::nonlocal) {
    check_kernel(s.kernel.kappa);
  }
}

/// Interface operator for the spec; the coercivity gate is applied to the
/// nonlocal operator with the built kernel's a (scaled by eps^2, the
/// dimensionless form of theta - theta_c + a for sigma, eps != 1).
inline InterfaceOperator build_operator(const ExperimentSpec& s, const GridPtr& grid, InterfaceKind kind,
                                        double kappa) {
  if (kind == InterfaceKind::local) return InterfaceOperator::local(grid);
  auto kernel = std::make_shared<const KernelSpec>(build_kernel(s.kernel.family, kappa, grid, s.kernel.profile));
  try {
    check_coercivity(s.pot, s.phys.eps_int * s.phys.eps_int * kernel->a_const());
  } catch (const CoercivityError& e) {
    throw ValidationError(e.what());
  }
  return InterfaceOperator::nonlocal(std::move(kernel));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// White noise restricted to modes |m_x|, |m_y| <= n/8 with zero mean.
inline ScalarField band_limited_noise(const GridPtr& grid, std::mt19937_64& rng) {
  ScalarField w(grid);
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = 2.0 * uniform01(rng) - 1.0;
  Spectrum s = to_spectral(w);
  const long cut = static_cast<long>(grid->n() / 8);
  const std::size_t h = grid->nh();
  for (std::size_t i = 0; i < grid->n(); ++i)
    for (std::size_t j = 0; j < h; ++j)
      if (std::labs(grid->mode(i)) > cut || static_cast<long>(j) > cut) s(i, j) = 0.0;
  s[0] = 0.0;
  return to_physical(std::move(s));
}

/// Initial (u0, omega0, phi0) for the recipe. phi0 is clipped to
/// |phi0| <= 1 - delta0.
inline SimState initial_state(const ExperimentSpec& s, const Stepper& stepper) {
  const GridPtr& grid = stepper.model().op.grid_ptr();
  const InitialData& d = s.init;
  const double L = s.grid.length;
  const double k = 2.0 * std::numbers::pi / L;
  const double clip = 1.0 - d.delta0;
  ScalarField phi(grid, d.m0);
  VectorField2 u(grid);
  ScalarField omega(grid, d.omega0);

  switch (d.recipe) {
  case InitialRecipe::spinodal: {
    std::mt19937_64 rng(s.seed);
    ScalarField xi = band_limited_noise(grid, rng);
    const double m = xi.max_abs();
    if (m > 0.0) phi.axpy(d.amplitude / m, xi);
    VectorField2 v(band_limited_noise(grid, rng), band_limited_noise(grid, rng));
    v = leray_project(v);
    v.u1 += -v.u1.mean();
    v.u2 += -v.u2.mean();
    const double norm = v.l2_norm();
    if (norm > 0.0) u = v * (d.u_norm / norm);
    break;
  }
  case InitialRecipe::smooth: {
    phi = ScalarField::from_function(grid, [&](double x, double y) {
      return d.m0 + d.amplitude * (std::cos(k * x) + 0.5 * std::sin(k * (x + 2.0 * y))) / 1.5;
    });
    VectorField2 v(ScalarField::from_function(grid, [&](double x, double y) { return std::sin(k * x) * std::cos(k * y); }),
                   ScalarField::from_function(grid, [&](double x, double y) { return -std::cos(k * x) * std::sin(k * y); }));
    const double norm = v.l2_norm();
    u = v * (d.u_norm / norm);
    omega = ScalarField::from_function(grid, [&](double, double y) { return d.omega0 * std::cos(k * y); });
    break;
  }
  case InitialRecipe::quiescent:
    break;
  case InitialRecipe::taylor_green:
    u = VectorField2(
        ScalarField::from_function(grid, [&](double x, double y) { return d.u_norm * std::sin(k * x) * std::cos(k * y); }),
        ScalarField::from_function(grid, [&](double x, double y) { return -d.u_norm * std::cos(k * x) * std::sin(k * y); }));
    break;
  }
  phi = phi.map([clip](double v) { return std::clamp(v, -clip, clip); });
  return make_state(stepper, std::move(u), std::move(omega), std::move(phi));
}

struct FailureRecord {
  std::string kind;
  std::string substep;
  std::string message;
  long step = -1;
  double t = 0.0;
};

struct RunOptions {
  bool keep_trajectory = true;
  /// Called at t = 0, at every snapshot and on the final state.
  std::function<void(const SimState&, long step)> on_snapshot;
};

struct RunResult {
  Trajectory trajectory;
  std::vector<EnergyReport> energy;
  SimState final_state;
  std::optional<FailureRecord> failure;
  long steps_taken = 0;
  double min_gap = 1.0;
  double max_mass_drift = 0.0;
  int max_newton_iterations = 0;

  bool ok() const noexcept { return !failure.has_value(); }
};

/// Integrates one trajectory with the given interface operator. Snapshots and
/// energy reports are taken every snapshot_every steps and at the final step.
inline RunResult run_with(const ExperimentSpec& s, InterfaceOperator op, const RunOptions& opt = {}) {
  Model model{std::move(op), Potential(s.pot), s.phys};
  Stepper stepper(std::move(model), s.scheme);
  SimState state = initial_state(s, stepper);
  const Model& m = stepper.model();

  RunResult r;
  const double mass0 = state.phi.mean();
  auto record = [&](const SimState& st, long step) {
    r.energy.push_back(energy_report(st, m.op, m.pot, m.params));
    if (opt.keep_trajectory) r.trajectory.push_back({st.t, st.u, st.omega, st.phi});
    if (opt.on_snapshot) opt.on_snapshot(st, step);
  };
  r.min_gap = 1.0 - state.phi.max_abs();
  record(state, 0);

  const long steps = s.step_count();
  for (long n = 1; n <= steps; ++n) {
    try {
      SimState next = stepper.full_step(state);
      // t accumulates as n * dt, not by repeated addition.
      next.t = static_cast<double>(n) * s.scheme.dt;
      state = std::move(next);
    } catch (StepError& e) {
      e.set_step(n);
      r.failure = FailureRecord{e.kind(), e.substep(), e.what(), n, state.t};
      break;
    }
    r.steps_taken = n;
    r.max_newton_iterations = std::max(r.max_newton_iterations, stepper.last_newton_iterations());
    r.min_gap = std::min(r.min_gap, 1.0 - state.phi.max_abs());
    r.max_mass_drift = std::max(r.max_mass_drift, std::abs(state.phi.mean() - mass0));
    if (n % s.snapshot_every == 0 || n == steps) record(state, n);
  }
  r.final_state = std::move(state);
  return r;
}

inline RunResult run_single(const ExperimentSpec& s, const RunOptions& opt = {}) {
  validate_spec(s);
  const GridPtr grid = TorusGrid::create(s.grid.n, s.grid.length);
  return run_with(s, build_operator(s, grid, s.kernel.op, s.kernel.kappa), opt);
}

/// Runs fn(i) for i in [0, count) on `threads` workers. Results must be
/// written by index; the first exception (by index) is rethrown.
template <class Fn>
void parallel_rows(std::size_t count, int threads, Fn&& fn) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares fit of log y against log x.
inline LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("fit_loglog: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  LineFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

struct TwoTermFit {
  double c1 = 0.0;
  double c2 = 0.0;
  /// 1 - SS_res / SS_tot with SS_tot about the mean.
  double r2 = 0.0;
};

/// Least squares y ~ c1 a + c2 b without intercept.
inline TwoTermFit fit_two_term(const std::vector<double>& a, const std::vector<double>& b, const std::vector<double>& y) {
  double aa = 0, ab = 0, bb = 0, ay = 0, by = 0, ybar = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    aa += a[i] * a[i];
    ab += a[i] * b[i];
    bb += b[i] * b[i];
    ay += a[i] * y[i];
    by += b[i] * y[i];
    ybar += y[i];
  }
  ybar /= static_cast<double>(y.size());
  const double det = aa * bb - ab * ab;
  if (det == 0.0) throw ParameterError("fit_two_term: singular design");
  TwoTermFit f;
  f.c1 = (ay * bb - by * ab) / det;
  f.c2 = (by * aa - ay * ab) / det;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - f.c1 * a[i] - f.c2 * b[i];
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  f.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

struct EtaRow {
  double eta_r = 0.0;
  double metric_nagg = 0.0;
  double metric_nmodelh = 0.0;
  double min_gap = 0.0;
  double mass_drift = 0.0;
  double max_energy_residual = 0.0;
  std::optional<FailureRecord> failure;
};

struct MismatchRow {
  double eta_r = 0.0;
  double mismatch = 0.0;
  double metric = 0.0;
  std::optional<FailureRecord> failure;
};

struct EtaSweepResult {
  std::vector<EtaRow> rows;
  /// eta_r = 0 run compared against the separately computed nAGG reference.
  double zero_row_metric = 0.0;
  /// Matched densities and eta_r = 0 against the nModelH reference.
  double zero_row_nmodelh = 0.0;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
  double split_visc = 0.0;
  std::vector<MismatchRow> mismatch_rows;
  TwoTermFit mismatch_fit;
  bool has_mismatch_fit = false;
};

/// nMAGG runs over eta_r against the nAGG reference (eta_r = 0, same
/// densities) and the nModelH reference (eta_r = 0, both densities equal to
/// the mean density). All runs share grid, dt, snapshots, initial data,
/// omega0 = 0 and one split viscosity.
inline EtaSweepResult eta_r_sweep(const ExperimentSpec& spec) {
  ExperimentSpec base = spec;
  base.init.omega0 = 0.0;
  validate_spec(base);
  double eta_r_max = 0.0;
  for (double v : base.sweep) eta_r_max = std::max(eta_r_max, v);
  for (double v : base.mismatch_eta_r) eta_r_max = std::max(eta_r_max, v);
  double mismatch_max = 0.0;
  for (double v : base.mismatch) mismatch_max = std::max(mismatch_max, v);
  const double rho_bar = 0.5 * (base.phys.rho1 + base.phys.rho2);
  if (!base.scheme.split_visc) base.scheme.split_visc = base.phys.eta_max() + eta_r_max;

  struct Job {
    ExperimentSpec spec;
  };
  std::vector<Job> jobs;
  auto with = [&](double eta_r, std::optional<double> mismatch) {
    ExperimentSpec s = base;
    s.phys.eta_r = eta_r;
    if (mismatch) {
      s.phys.rho1 = rho_bar + 0.5 * *mismatch;
      s.phys.rho2 = rho_bar - 0.5 * *mismatch;
    }
    s.threads = 1;
    return Job{s};
  };
  // 0: nAGG reference, 1: eta_r = 0 row, 2: nModelH reference,
  // 3: matched densities with eta_r = 0, then sweep rows, then mismatch grid.
  jobs.push_back(with(0.0, std::nullopt));
  jobs.push_back(with(0.0, std::nullopt));
  jobs.push_back(with(0.0, 0.0));
  jobs.push_back(with(0.0, 0.0));
  const std::size_t sweep0 = jobs.size();
  for (double v : base.sweep) jobs.push_back(with(v, std::nullopt));
  const std::size_t grid0 = jobs.size();
  for (double e : base.mismatch_eta_r)
    for (double m : base.mismatch) jobs.push_back(with(e, m));

  std::vector<RunResult> results(jobs.size());
  const GridPtr grid = TorusGrid::create(base.grid.n, base.grid.length);
  parallel_rows(jobs.size(), spec.threads, [&](std::size_t i) {
    const ExperimentSpec& s = jobs[i].spec;
    results[i] = run_with(s, build_operator(s, grid, s.kernel.op, s.kernel.kappa));
  });

  auto require_ok = [&](std::size_t i, const char* what) {
    if (!results[i].ok()) {
      const FailureRecord& f = *results[i].failure;
      StepError e(f.kind, f.substep, std::string(what) + ": " + f.message);
      e.set_step(f.step);
      throw e;
    }
  };
  require_ok(0, "nAGG reference");
  require_ok(2, "nModelH reference");

  EtaSweepResult out;
  out.split_visc = *base.scheme.split_visc;
  if (results[1].ok()) out.zero_row_metric = consistency_metric(results[1].trajectory, results[0].trajectory);
  if (results[3].ok()) out.zero_row_nmodelh = consistency_metric(results[3].trajectory, results[2].trajectory);

  for (std::size_t k = 0; k < base.sweep.size(); ++k) {
    const RunResult& r = results[sweep0 + k];
    EtaRow row;
    row.eta_r = base.sweep[k];
    row.min_gap = r.min_gap;
    row.mass_drift = r.max_mass_drift;
    row.failure = r.failure;
    if (r.ok()) {
      row.metric_nagg = consistency_metric(r.trajectory, results[0].trajectory);
      row.metric_nmodelh = consistency_metric(r.trajectory, results[2].trajectory);
      row.max_energy_residual = energy_law_residual(r.energy).max_abs;
    } else {
      row.metric_nagg = row.metric_nmodelh = std::numeric_limits<double>::quiet_NaN();
    }
    out.rows.push_back(row);
  }

  // Slope over the three smallest eta_r (the sweep is decreasing).
  std::vector<double> xs, ys;
  for (std::size_t k = out.rows.size(); k-- > 0 && xs.size() < 3;) {
    if (!out.rows[k].failure && out.rows[k].eta_r > 0.0 && out.rows[k].metric_nagg > 0.0) {
      xs.push_back(out.rows[k].eta_r);
      ys.push_back(out.rows[k].metric_nagg);
    }
  }
  if (xs.size() >= 2) out.fitted_slope = fit_loglog(xs, ys).slope;

  if (!base.mismatch.empty()) {
    std::vector<double> a, b, y;
    std::size_t idx = grid0;
    for (double e : base.mismatch_eta_r) {
      for (double m : base.mismatch) {
        const RunResult& r = results[idx++];
        MismatchRow row{e, m, std::numeric_limits<double>::quiet_NaN(), r.failure};
        if (r.ok()) {
          row.metric = consistency_metric(r.trajectory, results[2].trajectory);
          a.push_back(e);
          b.push_back(m * m);
          y.push_back(row.metric);
        }
        out.mismatch_rows.push_back(row);
      }
    }
    if (y.size() >= 3) {
      out.mismatch_fit = fit_two_term(a, b, y);
      out.has_mismatch_fit = true;
    }
  }
  return out;
}

struct KappaSweepRow {
  double kappa = 0.0;
  bool resolved = false;
  std::string note;
  KappaRow functional;
  /// max over snapshots of |phi_kappa - phi_local| in L2
  double distance = std::numeric_limits<double>::quiet_NaN();
  std::optional<FailureRecord> failure;
};

struct KappaSweepResult {
  std::vector<KappaSweepRow> rows;
  bool static_monotone = false;
  bool dynamic_monotone = false;
  std::optional<FailureRecord> reference_failure;
};

/// Fixed test pair for the static table: phi = sin(2 pi x / L),
/// zeta = cos(2 pi y / L) + sin(2 pi x / L).
inline std::pair<ScalarField, ScalarField> kappa_table_fields(const GridPtr& grid) {
  const double k = 2.0 * std::numbers::pi / grid->period_length();
  return {ScalarField::from_function(grid, [k](double x, double) { return std::sin(k * x); }),
          ScalarField::from_function(grid, [k](double x, double y) { return std::cos(k * y) + std::sin(k * x); })};
}

inline KappaRow kappa_row(double kappa, const ScalarField& phi, const ScalarField& zeta, const KernelInputs& in) {
  const std::vector<KappaRow> t = kappa_limit_table(phi, {kappa}, zeta, in.family, in.profile);
  return t.front();
}

/// Static functional gaps and dynamic distances to the local-model reference.
inline KappaSweepResult kappa_sweep(const ExperimentSpec& spec, bool dynamic = true) {
  validate_spec(spec);
  const GridPtr grid = TorusGrid::create(spec.grid.n, spec.grid.length);
  const auto [phi, zeta] = kappa_table_fields(grid);

  KappaSweepResult out;
  out.rows.resize(spec.sweep.size());
  for (std::size_t k = 0; k < spec.sweep.size(); ++k) {
    KappaSweepRow& row = out.rows[k];
    row.kappa = spec.sweep[k];
    try {
      row.functional = kappa_row(row.kappa, phi, zeta, spec.kernel);
      row.resolved = true;
    } catch (const ResolutionError& e) {
      row.note = e.what();
    } catch (const KernelSupportError& e) {
      row.note = e.what();
    }
  }

  std::vector<double> gaps;
  for (const auto& row : out.rows)
    if (row.resolved) gaps.push_back(row.functional.rel_gap);
  out.static_monotone = gaps.size() >= 2;
  for (std::size_t i = 1; i < gaps.size(); ++i) out.static_monotone = out.static_monotone && gaps[i] < gaps[i - 1];

  if (!dynamic) return out;

  // Job 0 is the local reference, job k + 1 the kappa row k.
  std::vector<RunResult> results(spec.sweep.size() + 1);
  std::vector<std::string> errors(results.size());
  parallel_rows(results.size(), spec.threads, [&](std::size_t i) {
    if (i > 0 && !out.rows[i - 1].resolved) return;
    ExperimentSpec s = spec;
    const bool local = i == 0;
    try {
      results[i] = run_with(s, build_operator(s, grid, local ? InterfaceKind::local : InterfaceKind::nonlocal,
                                              local ? s.kernel.kappa : s.sweep[i - 1]));
    } catch (const ValidationError& e) {
      errors[i] = e.what();
    }
  });
  if (!errors[0].empty()) throw ValidationError(errors[0]);
  out.reference_failure = results[0].failure;

  std::vector<double> dists;
  for (std::size_t k = 0; k < out.rows.size(); ++k) {
    KappaSweepRow& row = out.rows[k];
    if (!row.resolved) continue;
    if (!errors[k + 1].empty()) {
      row.resolved = false;
      row.note = errors[k + 1];
      continue;
    }
    const RunResult& r = results[k + 1];
    row.failure = r.failure;
    if (!r.ok() || out.reference_failure) continue;
    double d = 0.0;
    for (std::size_t j = 0; j < r.trajectory.size(); ++j) {
      const ScalarField diff = r.trajectory[j].phi - results[0].trajectory[j].phi;
      d = std::max(d, diff.l2_norm());
    }
    row.distance = d;
    dists.push_back(d);
  }
  out.dynamic_monotone = dists.size() >= 2;
  for (std::size_t i = 1; i < dists.size(); ++i) out.dynamic_monotone = out.dynamic_monotone && dists[i] < dists[i - 1];
  return out;
}

} // namespace nmagg
