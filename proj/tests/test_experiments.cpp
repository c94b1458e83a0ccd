#include <catch_amalgamated.hpp>

#include <nmagg/experiments.hpp>

#include <cmath>
#include <numbers>

using namespace nmagg;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.grid = {32, 1.0};
  s.kernel.kappa = 0.2;
  s.t_final = 10 * s.scheme.dt;
  s.snapshot_every = 5;
  return s;
}

std::string gate_message(const ExperimentSpec& s) {
  try {
    validate_spec(s);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("validation gates name the failing section", "[experiments]") {
  CHECK(gate_message(small_spec()).empty());

  ExperimentSpec s = small_spec();
  s.pot.theta = 1.5;
  CHECK_THAT(gate_message(s), StartsWith("potential.theta:"));

  s = small_spec();
  s.kernel.kappa = 0.1;
  CHECK_THAT(gate_message(s), StartsWith("kernel.resolution:"));
  CHECK_THAT(gate_message(s), ContainsSubstring("4-cell"));

  s = small_spec();
  s.kernel.kappa = 0.6;
  CHECK_THAT(gate_message(s), StartsWith("kernel.support:"));

  s = small_spec();
  s.phys.eta1 = -1.0;
  CHECK_THAT(gate_message(s), StartsWith("physics.range:"));

  s = small_spec();
  s.scheme.split_visc = 0.01;
  CHECK_THAT(gate_message(s), StartsWith("scheme.range:"));

  s = small_spec();
  s.grid.n = 31;
  CHECK_THAT(gate_message(s), StartsWith("grid.n:"));

  s = small_spec();
  s.kind = ExperimentKind::eta_r_sweep;
  CHECK_THAT(gate_message(s), StartsWith("experiment.sweep:"));
  s.sweep = {0.01, 0.1};
  CHECK_THAT(gate_message(s), ContainsSubstring("decreasing"));

  s = small_spec();
  s.init.m0 = 0.95;
  CHECK_THAT(gate_message(s), StartsWith("experiment.m0:"));
}

TEST_CASE("coercivity gate uses eps^2 a", "[experiments]") {
  // a ~ 8 / kappa^2 = 200; theta - theta_c + eps^2 a <= 0 once eps^2 < 1e-3
  ExperimentSpec s = small_spec();
  s.phys.eps_int = 0.02;
  CHECK_THAT(gate_message(s), StartsWith("potential.coercivity:"));
  s.phys.eps_int = 0.5;
  CHECK(gate_message(s).empty());
  // the local operator has no a and skips the gate
  s.phys.eps_int = 0.02;
  s.kernel.op = InterfaceKind::local;
  CHECK(gate_message(s).empty());
}

TEST_CASE("initial recipes honour their invariants", "[experiments]") {
  ExperimentSpec s = small_spec();
  const GridPtr g = TorusGrid::create(s.grid.n, s.grid.length);
  SECTION("spinodal") {
    s.init.m0 = 0.1;
    s.init.amplitude = 0.05;
    s.init.u_norm = 0.2;
    Stepper st(Model{build_operator(s, g, InterfaceKind::nonlocal, 0.2), Potential(s.pot), s.phys}, s.scheme);
    const SimState a = initial_state(s, st);
    CHECK_THAT(a.phi.mean(), WithinAbs(0.1, 1e-15));
    CHECK_THAT(std::abs(a.phi.max() - 0.1) + 0.0, WithinAbs(0.05, 0.05));
    CHECK((a.phi - ScalarField(g, 0.1)).max_abs() <= 0.05 + 1e-15);
    CHECK_THAT(a.u.l2_norm(), WithinRel(0.2, 1e-12));
    CHECK(divergence(a.u).max_abs() < 1e-10);
    CHECK(a.omega.max_abs() == 0.0);
    // same seed, same data; new seed, new data
    const SimState b = initial_state(s, st);
    CHECK(a.phi[17] == b.phi[17]);
    s.seed = 43;
    CHECK(initial_state(s, st).phi[17] != a.phi[17]);
  }
  SECTION("smooth data is clipped to 1 - delta0") {
    s.init.recipe = InitialRecipe::smooth;
    s.init.amplitude = 2.0;
    s.init.delta0 = 0.1;
    s.init.omega0 = 0.3;
    Stepper st(Model{build_operator(s, g, InterfaceKind::nonlocal, 0.2), Potential(s.pot), s.phys}, s.scheme);
    const SimState a = initial_state(s, st);
    CHECK_THAT(a.phi.max_abs(), WithinAbs(0.9, 1e-15));
    CHECK_THAT(a.omega.max_abs(), WithinAbs(0.3, 1e-12));
    CHECK_THAT(a.u.l2_norm(), WithinRel(s.init.u_norm, 1e-12));
  }
  SECTION("taylor-green and quiescent") {
    s.init.recipe = InitialRecipe::taylor_green;
    s.init.u_norm = 0.7;
    Stepper st(Model{build_operator(s, g, InterfaceKind::nonlocal, 0.2), Potential(s.pot), s.phys}, s.scheme);
    CHECK_THAT(initial_state(s, st).u.max_abs(), WithinAbs(0.7, 1e-12));
    s.init.recipe = InitialRecipe::quiescent;
    CHECK(initial_state(s, st).u.max_abs() == 0.0);
  }
}

TEST_CASE("band-limited noise has zero mean and no high modes", "[experiments]") {
  const GridPtr g = TorusGrid::create(32, 1.0);
  std::mt19937_64 rng(7);
  const ScalarField w = band_limited_noise(g, rng);
  CHECK_THAT(w.mean(), WithinAbs(0.0, 1e-16));
  const Spectrum s = to_spectral(w);
  for (std::size_t i = 0; i < g->n(); ++i)
    for (std::size_t j = 0; j < g->nh(); ++j)
      if (std::labs(g->mode(i)) > 4 || j > 4) CHECK(std::abs(s(i, j)) < 1e-12);
  for (int k = 0; k < 1000; ++k) {
    const double v = uniform01(rng);
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("fits recover exact power laws and combinations", "[experiments]") {
  const LineFit f = fit_loglog({1e-1, 1e-2, 1e-3}, {3e-2, 3e-4, 3e-6});
  CHECK_THAT(f.slope, WithinAbs(2.0, 1e-12));
  CHECK_THAT(std::exp(f.intercept), WithinRel(3.0, 1e-10));

  std::vector<double> a, b, y;
  for (double e : {0.4, 0.2, 0.1})
    for (double m : {0.3, 0.1}) {
      a.push_back(e);
      b.push_back(m * m);
      y.push_back(2.0 * e + 5.0 * m * m);
    }
  const TwoTermFit t = fit_two_term(a, b, y);
  CHECK_THAT(t.c1, WithinRel(2.0, 1e-12));
  CHECK_THAT(t.c2, WithinRel(5.0, 1e-12));
  CHECK_THAT(t.r2, WithinAbs(1.0, 1e-12));
}

TEST_CASE("single runs record snapshots, energy and invariants", "[experiments]") {
  ExperimentSpec s = small_spec();
  s.init.amplitude = 0.3;
  const RunResult r = run_single(s);
  REQUIRE(r.ok());
  CHECK(r.steps_taken == 10);
  // t = 0, steps 5 and 10
  REQUIRE(r.trajectory.size() == 3);
  REQUIRE(r.energy.size() == 3);
  CHECK_THAT(r.trajectory.back().t, WithinAbs(10 * s.scheme.dt, 1e-18));
  CHECK(r.max_mass_drift <= 1e-13);
  CHECK(r.min_gap > 0.5);
  CHECK(r.max_newton_iterations >= 1);

  int calls = 0;
  RunOptions opt;
  opt.keep_trajectory = false;
  opt.on_snapshot = [&](const SimState&, long) { ++calls; };
  CHECK(run_single(s, opt).trajectory.empty());
  CHECK(calls == 3);
}

TEST_CASE("quiescent runs have a vanishing energy-law residual", "[experiments]") {
  ExperimentSpec s = small_spec();
  s.init.recipe = InitialRecipe::quiescent;
  s.init.m0 = -0.3;
  s.snapshot_every = 1;
  const RunResult r = run_single(s);
  REQUIRE(r.ok());
  CHECK(energy_law_residual(r.energy).max_abs <= 1e-12);
}

TEST_CASE("step failures are captured with their step index", "[experiments]") {
  ExperimentSpec s = small_spec();
  s.scheme.newton_max_iter = 1;
  s.scheme.newton_tol = 1e-14;
  s.init.amplitude = 0.3;
  const RunResult r = run_single(s);
  REQUIRE(r.failure);
  CHECK(r.failure->kind == "NewtonDivergence");
  CHECK(r.failure->substep == "ch");
  CHECK(r.failure->step == 1);
  CHECK(r.steps_taken == 0);
}

TEST_CASE("eta_r sweep degenerates exactly at eta_r = 0", "[experiments]") {
  ExperimentSpec s = small_spec();
  s.kind = ExperimentKind::eta_r_sweep;
  s.phys.rho1 = s.phys.rho2 = 1.0;
  s.init.omega0 = 0.5;
  s.init.u_norm = 0.5;
  s.t_final = 20 * s.scheme.dt;
  s.sweep = {1e-1, 1e-2, 1e-3};
  s.mismatch = {0.2, 0.1};
  s.mismatch_eta_r = {1e-2, 5e-3};
  const EtaSweepResult r = eta_r_sweep(s);
  CHECK(r.zero_row_metric == 0.0);
  CHECK(r.zero_row_nmodelh == 0.0);
  REQUIRE(r.rows.size() == 3);
  for (std::size_t k = 1; k < r.rows.size(); ++k) CHECK(r.rows[k].metric_nagg < r.rows[k - 1].metric_nagg);
  CHECK(r.fitted_slope > 0.9);
  CHECK_THAT(r.split_visc, WithinAbs(0.1 + 0.1, 1e-15));
  CHECK(r.mismatch_rows.size() == 4);
  CHECK(r.has_mismatch_fit);
}

TEST_CASE("kappa sweep reports unresolved rows instead of failing", "[experiments]") {
  ExperimentSpec s = small_spec();
  s.kind = ExperimentKind::kappa_sweep;
  s.init.recipe = InitialRecipe::smooth;
  s.init.amplitude = 0.3;
  s.sweep = {0.4, 0.3, 0.2, 0.1};
  const KappaSweepResult r = kappa_sweep(s);
  REQUIRE(r.rows.size() == 4);
  CHECK_FALSE(r.rows[3].resolved);
  CHECK_THAT(r.rows[3].note, ContainsSubstring("resolution"));
  CHECK(std::isnan(r.rows[3].distance));
  CHECK(r.static_monotone);
  CHECK(r.dynamic_monotone);
  CHECK_FALSE(r.reference_failure);
  for (std::size_t k = 1; k < 3; ++k) CHECK(r.rows[k].distance < r.rows[k - 1].distance);
}
