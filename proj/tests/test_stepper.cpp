#include <catch_amalgamated.hpp>

#include <nmagg/stepper.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace nmagg;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Model nonlocal_model(const GridPtr& g, double kappa, PhysParams p = {}) {
  auto k = std::make_shared<const KernelSpec>(build_kernel(KernelFamily::disk_profile, kappa, g));
  return Model{InterfaceOperator::nonlocal(k), Potential(PotentialSpec{}), p};
}

ScalarField noise(const GridPtr& g, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amp, amp);
  ScalarField f(g);
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = dist(rng);
  // smooth it a little so the state is resolved
  Spectrum s = to_spectral(f);
  s.dealias();
  return to_physical(std::move(s));
}

VectorField2 shear_flow(const GridPtr& g, double amp) {
  return {ScalarField::from_function(g, [=](double, double y) { return amp * std::sin(two_pi * y); }),
          ScalarField::from_function(g, [=](double x, double) { return 0.5 * amp * std::cos(two_pi * x); })};
}

double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

} // namespace

TEST_CASE("a constant state at rest is a fixed point", "[stepper]") {
  const auto g = TorusGrid::create(32, 1.0);
  Stepper st(nonlocal_model(g, 0.2), SchemeConfig{});
  SimState s = make_state(st, VectorField2(g), ScalarField(g), ScalarField(g, 0.3));
  for (int n = 0; n < 5; ++n) s = st.full_step(s);
  CHECK(max_diff(s.phi, ScalarField(g, 0.3)) < 1e-14);
  CHECK(s.u.max_abs() < 1e-14);
  CHECK(s.omega.max_abs() < 1e-14);
  CHECK_THAT(s.t, WithinAbs(5 * 2.5e-4, 1e-15));
}

TEST_CASE("mass is conserved and phi stays inside (-1, 1)", "[stepper]") {
  const auto g = TorusGrid::create(32, 1.0);
  for (auto split : {NonlocalSplit::implicit, NonlocalSplit::explicit_convolution}) {
    SchemeConfig cfg;
    cfg.nonlocal_split = split;
    Stepper st(nonlocal_model(g, 0.2), cfg);
    ScalarField phi = noise(g, 5, 0.7);
    phi += 0.1;
    SimState s = make_state(st, leray_project(shear_flow(g, 0.3)), noise(g, 6, 0.1), phi);
    const double m0 = s.phi.mean();
    for (int n = 0; n < 20; ++n) {
      s = st.full_step(s);
      CHECK(std::abs(s.phi.mean() - m0) <= 1e-13);
      CHECK(s.phi.max_abs() < 1.0);
      CHECK(divergence(s.u).max_abs() < 1e-10);
    }
  }
}

TEST_CASE("Cahn-Hilliard step reproduces the linearized decay rate", "[stepper]") {
  // u = 0, phi = m + A cos x: d/dt A = -k^2 (sigma eps s(k) + sigma/eps F''(m)) A
  const double L = two_pi;
  const auto g = TorusGrid::create(64, L);
  const double m = 0.2, amp = 1e-3, tau = 1e-4;
  const Potential pot(PotentialSpec{});
  auto kern = std::make_shared<const KernelSpec>(build_kernel(KernelFamily::disk_profile, 0.5, g));
  for (const bool local : {false, true}) {
    for (auto split : {NonlocalSplit::implicit, NonlocalSplit::explicit_convolution}) {
      const InterfaceOperator op = local ? InterfaceOperator::local(g) : InterfaceOperator::nonlocal(kern);
      SchemeConfig cfg;
      cfg.dt = tau;
      cfg.nonlocal_split = split;
      Stepper st(Model{op, pot, PhysParams{}}, cfg);
      const auto phi = ScalarField::from_function(g, [&](double x, double) { return m + amp * std::cos(x); });
      SimState s = make_state(st, VectorField2(g), ScalarField(g), phi);
      const double a0 = to_spectral(s.phi)(1, 0).real();
      for (int n = 0; n < 10; ++n) {
        ChResult r = st.ch_step(s);
        s.phi = std::move(r.phi);
        s.mu = std::move(r.mu);
      }
      const double a1 = to_spectral(s.phi)(1, 0).real();
      const double measured = -std::log(a1 / a0) / (10 * tau);
      const double sym = local ? 1.0 : kern->a_const() - kern->symbol_at(1, 0);
      const double expected = sym + pot.ddF(m);
      CHECK_THAT(measured, WithinRel(expected, 0.05));
    }
  }
}

TEST_CASE("one step is first-order accurate", "[stepper]") {
  const auto g = TorusGrid::create(32, 1.0);
  auto run = [&](double tau, int steps) {
    SchemeConfig cfg;
    cfg.dt = tau;
    Stepper st(nonlocal_model(g, 0.2), cfg);
    const auto phi = ScalarField::from_function(g, [](double x, double y) {
      return 0.3 * std::cos(two_pi * x) + 0.2 * std::sin(two_pi * (x + y));
    });
    SimState s = make_state(st, leray_project(shear_flow(g, 0.2)),
                            ScalarField::from_function(g, [](double, double y) { return 0.1 * std::cos(two_pi * y); }),
                            phi);
    for (int n = 0; n < steps; ++n) s = st.full_step(s);
    return s;
  };
  auto distance = [](const SimState& a, const SimState& b) {
    const VectorField2 du = a.u - b.u;
    const ScalarField dp = a.phi - b.phi, dw = a.omega - b.omega;
    return std::sqrt(inner(du, du) + inner(dp, dp) + inner(dw, dw));
  };
  // global error at a fixed time halves with tau
  const SimState ref = run(2.5e-5, 80);
  const double e1 = distance(run(5e-4, 4), ref);
  const double e2 = distance(run(2.5e-4, 8), ref);
  const double e3 = distance(run(1.25e-4, 16), ref);
  CHECK_THAT(e1 / e2, WithinAbs(2.0, 0.4));
  CHECK_THAT(e2 / e3, WithinAbs(2.0, 0.4));
}

TEST_CASE("Taylor-Green vortex decays at the viscous rate", "[stepper]") {
  const auto g = TorusGrid::create(32, 1.0);
  PhysParams p;
  p.rho1 = p.rho2 = 1.3;
  p.eta1 = p.eta2 = 0.02;
  p.eta_r = 0.0;
  SchemeConfig cfg;
  cfg.dt = 1e-3;
  Stepper st(nonlocal_model(g, 0.2, p), cfg);
  const auto u = VectorField2(
      ScalarField::from_function(g, [](double x, double y) { return std::sin(two_pi * x) * std::cos(two_pi * y); }),
      ScalarField::from_function(g, [](double x, double y) { return -std::cos(two_pi * x) * std::sin(two_pi * y); }));
  SimState s = make_state(st, u, ScalarField(g), ScalarField(g));
  const double nu = p.eta1 / p.rho1;
  const double rate = 2.0 * nu * two_pi * two_pi;
  double prev = s.u.l2_norm();
  for (int n = 0; n < 20; ++n) {
    s = st.full_step(s);
    const double cur = s.u.l2_norm();
    CHECK_THAT(-std::log(cur / prev) / cfg.dt, WithinRel(rate, 0.01));
    prev = cur;
  }
  CHECK(s.omega.max_abs() == 0.0);
}

TEST_CASE("micro-rotation relaxes at rate 4 eta_r / rho with u = 0", "[stepper]") {
  const auto g = TorusGrid::create(16, 1.0);
  PhysParams p;
  p.eta_r = 0.2;
  SchemeConfig cfg;
  cfg.dt = 0.05;
  Stepper st(nonlocal_model(g, 0.3, p), cfg);
  const double phi0 = 0.4;
  SimState s = make_state(st, VectorField2(g), ScalarField(g, 1.5), ScalarField(g, phi0));
  const double rho = 0.5 * (p.rho1 + p.rho2) + p.rho_diff_half() * phi0;
  for (int n = 1; n <= 30; ++n) {
    s = st.full_step(s);
    const double expect = 1.5 * std::exp(-4.0 * p.eta_r * n * cfg.dt / rho);
    CHECK_THAT(s.omega[7], WithinRel(expect, 1e-12));
  }
}

TEST_CASE("eta_r = 0 keeps an initially zero micro-rotation at zero", "[stepper]") {
  const auto g = TorusGrid::create(32, 1.0);
  PhysParams p;
  p.eta_r = 0.0;
  Stepper st(nonlocal_model(g, 0.2, p), SchemeConfig{});
  SimState s = make_state(st, leray_project(shear_flow(g, 0.5)), ScalarField(g), noise(g, 8, 0.5));
  for (int n = 0; n < 10; ++n) s = st.full_step(s);
  CHECK(s.omega.max_abs() == 0.0);
  CHECK(s.u.max_abs() > 0.1);
}

TEST_CASE("momentum forces match hand-computed fields", "[stepper]") {
  const auto g = TorusGrid::create(32, 1.0);
  PhysParams p;
  p.eta1 = p.eta2 = 0.07;
  p.eta_r = 0.03;
  const VectorField2 u(ScalarField::from_function(g, [](double, double y) { return std::sin(two_pi * y); }),
                       ScalarField(g));
  const auto w = ScalarField::from_function(g, [](double x, double) { return std::cos(two_pi * x); });
  const ScalarField phi(g, 0.2), mu(g, -0.3);
  const VectorField2 f = momentum_forces(u, w, phi, phi, mu, p);
  // (u.grad)u = 0, div(2 eta D u + 2 eta_r W u) = (eta + eta_r) Lap u, 2 eta_r curl_1 w = (0, 2 eta_r 2 pi sin 2 pi x)
  const auto f1 = ScalarField::from_function(g, [&](double, double y) {
    return -(p.eta1 + p.eta_r) * two_pi * two_pi * std::sin(two_pi * y);
  });
  const auto f2 = ScalarField::from_function(g, [&](double x, double) {
    return 2.0 * p.eta_r * two_pi * std::sin(two_pi * x);
  });
  CHECK(max_diff(f.u1, f1) < 1e-11);
  CHECK(max_diff(f.u2, f2) < 1e-11);
}

TEST_CASE("stepping is deterministic", "[stepper]") {
  const auto g = TorusGrid::create(32, 1.0);
  auto run = [&] {
    Stepper st(nonlocal_model(g, 0.2), SchemeConfig{});
    SimState s = make_state(st, leray_project(shear_flow(g, 0.3)), noise(g, 3, 0.1), noise(g, 4, 0.5));
    for (int n = 0; n < 5; ++n) s = st.full_step(s);
    return s;
  };
  const SimState a = run(), b = run();
  for (std::size_t k = 0; k < a.phi.size(); ++k) {
    CHECK(a.phi[k] == b.phi[k]);
    CHECK(a.u.u1[k] == b.u.u1[k]);
    CHECK(a.omega[k] == b.omega[k]);
  }
}

TEST_CASE("failure paths raise typed step errors", "[stepper]") {
  const auto g = TorusGrid::create(32, 1.0);
  SECTION("Newton divergence") {
    SchemeConfig cfg;
    cfg.newton_max_iter = 1;
    cfg.newton_tol = 1e-14;
    Stepper st(nonlocal_model(g, 0.2), cfg);
    const SimState s = make_state(st, VectorField2(g), ScalarField(g), noise(g, 9, 0.6));
    CHECK_THROWS_AS(st.ch_step(s), NewtonDivergence);
    try {
      st.ch_step(s);
    } catch (const StepError& e) {
      CHECK(std::string(e.kind()) == "NewtonDivergence");
      CHECK(std::string(e.substep()) == "ch");
    }
  }
  SECTION("CFL violation") {
    Stepper st(nonlocal_model(g, 0.2), SchemeConfig{});
    const SimState s = make_state(st, leray_project(shear_flow(g, 500.0)), ScalarField(g), ScalarField(g));
    CHECK_THROWS_AS(st.full_step(s), CFLViolation);
  }
  SECTION("invalid scheme") {
    SchemeConfig cfg;
    cfg.split_visc = 0.01;
    CHECK_THROWS_AS(Stepper(nonlocal_model(g, 0.2), cfg), ParameterError);
    cfg = SchemeConfig{};
    cfg.dt = -1.0;
    CHECK_THROWS_AS(Stepper(nonlocal_model(g, 0.2), cfg), ParameterError);
  }
}
