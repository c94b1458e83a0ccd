// Runs the ten acceptance criteria at their stated tolerances and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include <nmagg/config.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>

using namespace nmagg;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ScalarField uniform_field(const GridPtr& g, std::mt19937_64& rng, double amp) {
  std::uniform_real_distribution<double> dist(-amp, amp);
  ScalarField f(g);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = dist(rng);
  return f;
}

// Criteria 1 and 2 share the default spinodal run.
struct SpinodalRun {
  RunResult result;
  double seconds = 0.0;
  double phi0_max = 0.0;
};

const SpinodalRun& spinodal_run() {
  static const SpinodalRun run = [] {
    SpinodalRun r;
    const ExperimentSpec spec;
    RunOptions opt;
    opt.keep_trajectory = false;
    const auto t0 = std::chrono::steady_clock::now();
    r.result = run_single(spec, opt);
    r.seconds = seconds_since(t0);
    r.phi0_max = r.result.energy.front().phi_max;
    return r;
  }();
  return run;
}

Outcome mass_conservation() {
  const SpinodalRun& r = spinodal_run();
  const bool ok = r.result.ok() && r.result.steps_taken == 1000 && r.result.max_mass_drift <= 1e-11 &&
                  r.seconds <= 60.0;
  return {ok, fmt("steps %ld, max |mean drift| %.3e (<= 1e-11), runtime %.1f s (<= 60)", r.result.steps_taken,
                  r.result.max_mass_drift, r.seconds)};
}

Outcome separation() {
  const SpinodalRun& r = spinodal_run();
  const bool ok = r.result.ok() && r.phi0_max <= 0.9 && r.result.min_gap > 0.0 && r.result.min_gap >= 1e-4;
  return {ok, fmt("max|phi0| %.3f, min gap 1 - max|phi| %.6f (>= 1e-4)", r.phi0_max, r.result.min_gap)};
}

Outcome energy_forms() {
  const auto t0 = std::chrono::steady_clock::now();
  const GridPtr g = TorusGrid::create(16, 1.0);
  const KernelSpec k = build_kernel(KernelFamily::disk_profile, 0.3, g);
  const std::size_t n = g->n();
  const double da = g->cell_area();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ScalarField phi = uniform_field(g, rng, 0.9);
    double s = 0.0;
    for (std::size_t i1 = 0; i1 < n; ++i1)
      for (std::size_t j1 = 0; j1 < n; ++j1)
        for (std::size_t i2 = 0; i2 < n; ++i2)
          for (std::size_t j2 = 0; j2 < n; ++j2) {
            const double d = phi(i1, j1) - phi(i2, j2);
            s += k.samples()((i1 + n - i2) % n, (j1 + n - j2) % n) * d * d;
          }
    const double brute = 0.25 * s * da * da;
    worst = std::max(worst, relative_gap(nonlocal_energy(k, phi), brute));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs <= 5.0, fmt("max relative error %.3e (<= 1e-9), runtime %.2f s (<= 5)", worst, secs)};
}

Outcome energy_law() {
  // L = 2 pi keeps the slowest phase modes at tau lambda << 1, so the
  // first-order residual is in its asymptotic range.
  auto run = [](double dt) {
    ExperimentSpec s;
    s.grid = {64, two_pi};
    s.kernel.kappa = 0.5;
    s.init.recipe = InitialRecipe::smooth;
    s.init.amplitude = 0.6;
    s.init.u_norm = 0.5;
    s.init.omega0 = 0.5;
    s.scheme.dt = dt;
    s.t_final = 0.1;
    s.snapshot_every = 1;
    return run_single(s);
  };
  const RunResult coarse = run(1e-3);
  const RunResult fine = run(5e-4);
  if (!coarse.ok() || !fine.ok()) return {false, "run failed"};
  const double r1 = energy_law_residual(coarse.energy).max_abs;
  const double r2 = energy_law_residual(fine.energy).max_abs;
  double min_d = 1e300;
  for (const auto* r : {&coarse, &fine})
    for (const auto& e : r->energy) min_d = std::min({min_d, e.d_mu, e.d_visc, e.d_curl, e.d_ang});
  const double ratio = r1 / r2;
  const bool ok = ratio >= 1.6 && ratio <= 2.6 && min_d >= -1e-12;
  return {ok, fmt("max residual %.4e (tau) / %.4e (tau/2) = %.3f in [1.6, 2.6], min dissipation term %.3e", r1, r2,
                  ratio, min_d)};
}

Outcome curl_identity() {
  const GridPtr g = TorusGrid::create(128, 1.0);
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const VectorField2 v(uniform_field(g, rng, 1.0), uniform_field(g, rng, 1.0));
    const ScalarField w = uniform_field(g, rng, 1.0);
    const StrainTensors st = strain_tensors(v);
    const ScalarField c = curl2(v);
    // 2 W:W = 4 w12^2 for the antisymmetric part of grad v
    const double lhs = 4.0 * inner(st.w12, st.w12) - 2.0 * inner(w, c) - 2.0 * inner(v, curl1(w)) + 4.0 * inner(w, w);
    const ScalarField gap = c - w * 2.0;
    const double rhs = inner(gap, gap);
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return {worst <= 1e-10, fmt("max relative difference %.3e over 50 pairs (<= 1e-10)", worst)};
}

Outcome kappa_limit() {
  const auto t0 = std::chrono::steady_clock::now();
  const GridPtr g = TorusGrid::create(512, 1.0);
  const ScalarField phi = ScalarField::from_function(g, [](double x, double) { return std::sin(two_pi * x); });
  const auto rows = kappa_limit_table(phi, {0.25, 0.177, 0.125, 0.088}, phi);
  const double secs = seconds_since(t0);
  bool decreasing = true;
  std::string gaps;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (k && !(rows[k].rel_gap < rows[k - 1].rel_gap)) decreasing = false;
    gaps += fmt("%s%.4f", k ? ", " : "", rows[k].rel_gap);
  }
  const bool ok = decreasing && rows.back().rel_gap <= 0.05 && secs <= 30.0;
  return {ok, fmt("gaps [%s], strictly decreasing %s, final <= 0.05, runtime %.1f s (<= 30)", gaps.c_str(),
                  decreasing ? "yes" : "no", secs)};
}

struct EtaRun {
  EtaSweepResult result;
  double seconds = 0.0;
};

const EtaRun& eta_run() {
  static const EtaRun run = [] {
    EtaRun r;
    const RunConfig cfg = parse_config(std::string(NMAGG_SOURCE_DIR) + "/configs/eta_r_sweep.ini");
    const auto t0 = std::chrono::steady_clock::now();
    r.result = eta_r_sweep(cfg.experiment);
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome eta_slope() {
  const EtaRun& e = eta_run();
  const auto& rows = e.result.rows;
  bool all_ok = rows.size() == 5;
  for (const auto& row : rows) all_ok = all_ok && !row.failure;
  std::vector<double> xs, ys;
  for (std::size_t k = rows.size() >= 3 ? rows.size() - 3 : 0; k < rows.size(); ++k) {
    xs.push_back(rows[k].eta_r);
    ys.push_back(rows[k].metric_nagg);
  }
  const double slope = all_ok ? fit_loglog(xs, ys).slope : std::numeric_limits<double>::quiet_NaN();
  const bool ok = all_ok && e.result.zero_row_metric <= 1e-20 && slope >= 0.9 && e.seconds <= 600.0;
  return {ok, fmt("eta_r = 0 metric %.3e (<= 1e-20), slope over 3 smallest %.3f (>= 0.9), runtime %.1f s (<= 600)",
                  e.result.zero_row_metric, slope, e.seconds)};
}

Outcome model_h() {
  const EtaRun& e = eta_run();
  bool all_ok = e.result.mismatch_rows.size() == 9;
  for (const auto& row : e.result.mismatch_rows) all_ok = all_ok && !row.failure;
  const TwoTermFit& f = e.result.mismatch_fit;
  const bool ok = all_ok && e.result.has_mismatch_fit && e.result.zero_row_nmodelh <= 1e-20 && f.c1 > 0.0 &&
                  f.c2 > 0.0 && f.r2 >= 0.95;
  return {ok, fmt("nModelH zero row %.3e (<= 1e-20), 3x3 fit c1 %.4e, c2 %.4e (> 0), R^2 %.4f (>= 0.95)",
                  e.result.zero_row_nmodelh, f.c1, f.c2, f.r2)};
}

Outcome taylor_green() {
  const GridPtr g = TorusGrid::create(128, 1.0);
  PhysParams p;
  p.rho1 = p.rho2 = 1.3;
  p.eta1 = p.eta2 = 0.02;
  p.eta_r = 0.0;
  SchemeConfig cfg;
  cfg.dt = 1e-3;
  auto kern = std::make_shared<const KernelSpec>(build_kernel(KernelFamily::disk_profile, 0.125, g));
  Stepper st(Model{InterfaceOperator::nonlocal(kern), Potential(PotentialSpec{}), p}, cfg);
  const VectorField2 u(
      ScalarField::from_function(g, [](double x, double y) { return std::sin(two_pi * x) * std::cos(two_pi * y); }),
      ScalarField::from_function(g, [](double x, double y) { return -std::cos(two_pi * x) * std::sin(two_pi * y); }));
  SimState s = make_state(st, u, ScalarField(g), ScalarField(g));
  // |u| decays like exp(-2 (2 pi)^2 eta t / rho)
  const double rate = 2.0 * two_pi * two_pi * p.eta1 / p.rho1;
  double worst = 0.0, prev = s.u.l2_norm();
  for (int n = 0; n < 50; ++n) {
    s = st.full_step(s);
    const double cur = s.u.l2_norm();
    worst = std::max(worst, relative_gap(-std::log(cur / prev) / cfg.dt, rate));
    prev = cur;
  }
  return {worst <= 0.01, fmt("max relative error of per-step decay rate %.3e over 50 steps (<= 0.01)", worst)};
}

Outcome rotation_damping() {
  const GridPtr g = TorusGrid::create(32, 1.0);
  PhysParams p;
  p.eta_r = 0.5;
  const double phi0 = -0.3;
  const double rho = 0.5 * (p.rho1 + p.rho2) + p.rho_diff_half() * phi0;
  SchemeConfig cfg;
  cfg.dt = 0.1 * rho / (4.0 * p.eta_r);
  auto kern = std::make_shared<const KernelSpec>(build_kernel(KernelFamily::disk_profile, 0.2, g));
  Stepper st(Model{InterfaceOperator::nonlocal(kern), Potential(PotentialSpec{}), p}, cfg);
  const double w0 = 0.8;
  SimState s = make_state(st, VectorField2(g), ScalarField(g, w0), ScalarField(g, phi0));
  double worst = 0.0;
  for (int n = 1; n <= 100; ++n) {
    s = st.full_step(s);
    const double expect = std::exp(-4.0 * p.eta_r * n * cfg.dt / rho);
    for (std::size_t k = 0; k < s.omega.size(); ++k) worst = std::max(worst, relative_gap(s.omega[k] / w0, expect));
  }
  return {worst <= 0.01, fmt("tau 4 eta_r / rho = %.3f, max relative error %.3e over 100 steps (<= 0.01)",
                             cfg.dt * 4.0 * p.eta_r / rho, worst)};
}

} // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"mass conservation", mass_conservation},
      {"boundedness and strict separation", separation},
      {"nonlocal energy two-form equivalence", energy_forms},
      {"discrete energy law residual", energy_law},
      {"2D curl identity", curl_identity},
      {"nonlocal-to-local functional limit", kappa_limit},
      {"nonpolar consistency slope", eta_slope},
      {"Model-H degeneracy", model_h},
      {"Taylor-Green viscous decay", taylor_green},
      {"micro-rotation damping", rotation_damping},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%2d] %s  %s: %s\n", index, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %d criteria passed\n", index - failures, index);
  return failures;
}
