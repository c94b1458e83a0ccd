#pragma once

#include "mixture.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>

namespace nmagg {

struct SchemeConfig {
  double dt = 2.5e-4;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  /// Defaults resolve against the physical parameters, see the accessors.
  std::optional<double> stab_s;
  std::optional<double> split_visc;
  std::optional<double> split_ang;
  double cfl_max = 0.5;
  NonlocalSplit nonlocal_split = NonlocalSplit::implicit;

  /// S, default sigma theta_c / eps.
  double stabilization(const PhysParams& p, const PotentialSpec& pot) const {
    return stab_s ? *stab_s : p.sigma * pot.theta_c / p.eps_int;
  }
  /// nu_s, default max(eta1, eta2) + eta_r.
  double visc_split(const PhysParams& p) const {
    return split_visc ? *split_visc : p.eta_max() + p.eta_r;
  }
  /// nu_a, default c_d + c_a.
  double ang_split(const PhysParams& p) const { return split_ang ? *split_ang : p.cda(); }

  void validate(const PhysParams& p) const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("scheme: dt must be positive");
    if (!(newton_tol > 0.0)) throw ParameterError("scheme: newton_tol must be positive");
    if (newton_max_iter < 1) throw ParameterError("scheme: newton_max_iter must be >= 1");
    if (!(cfl_max > 0.0)) throw ParameterError("scheme: cfl_max must be positive");
    if (stab_s && !(*stab_s >= 0.0)) throw ParameterError("scheme: stab_s must be >= 0");
    if (visc_split(p) < p.eta_max() + p.eta_r)
      throw ParameterError("scheme: split_visc must be >= max(eta1, eta2) + eta_r");
    if (ang_split(p) < p.cda()) throw ParameterError("scheme: split_ang must be >= cd + ca");
  }
};

/// Operator, potential and coefficients shared by every substep.
struct Model {
  InterfaceOperator op;
  Potential pot;
  PhysParams params;
};

/// Right-hand side of the momentum balance without the pressure:
///   -rho (u.grad) u + rho_d (grad mu . grad) u + div(2 eta D u + 2 eta_r W u)
///   + mu grad phi_cap + 2 eta_r curl_1 omega
/// with rho, eta evaluated at phi_coef.
inline VectorField2 momentum_forces(const VectorField2& u, const ScalarField& omega, const ScalarField& phi_coef,
                                    const ScalarField& phi_cap, const ScalarField& mu, const PhysParams& p) {
  const ScalarField rho = density(phi_coef, p);
  const ScalarField eta = coeff(phi_coef, p.eta1, p.eta2);
  const VelocityGradient g = velocity_gradient(u);
  const VectorField2 gmu = grad(mu);
  const VectorField2 gphi = grad(phi_cap);
  const double rd = p.rho_diff_half();
  const double er = p.eta_r;

  ScalarField s11(u.grid_ptr()), s12(u.grid_ptr()), s21(u.grid_ptr()), s22(u.grid_ptr());
  VectorField2 f(u.grid_ptr());
  for (std::size_t k = 0; k < u.u1.size(); ++k) {
    const double d11 = g.d1v1[k], d22 = g.d2v2[k];
    const double d12 = 0.5 * (g.d1v2[k] + g.d2v1[k]);
    // W_ij = (d_i v_j - d_j v_i)/2 with the convention (grad v)_ij = d_i v_j
    const double w12 = 0.5 * (g.d1v2[k] - g.d2v1[k]);
    s11[k] = 2.0 * eta[k] * d11;
    s22[k] = 2.0 * eta[k] * d22;
    s12[k] = 2.0 * eta[k] * d12 + 2.0 * er * w12;
    s21[k] = 2.0 * eta[k] * d12 - 2.0 * er * w12;

    // (a . grad) v = a_i d_i v_j
    const double a1 = -rho[k] * u.u1[k] + rd * gmu.u1[k];
    const double a2 = -rho[k] * u.u2[k] + rd * gmu.u2[k];
    f.u1[k] = a1 * g.d1v1[k] + a2 * g.d2v1[k] + mu[k] * gphi.u1[k];
    f.u2[k] = a1 * g.d1v2[k] + a2 * g.d2v2[k] + mu[k] * gphi.u2[k];
  }
  // (div S)_j = d_i S_ij
  f.u1 += divergence(VectorField2(std::move(s11), std::move(s21)));
  f.u2 += divergence(VectorField2(std::move(s12), std::move(s22)));
  if (er != 0.0) {
    const VectorField2 cw = curl1(omega);
    f.u1.axpy(2.0 * er, cw.u1);
    f.u2.axpy(2.0 * er, cw.u2);
  }
  return f;
}

struct ChResult {
  ScalarField phi;
  ScalarField mu;
  int newton_iterations = 0;
  double residual = 0.0;
};

/// First-order IMEX Lie splitting for the planar system:
/// Cahn-Hilliard, then momentum, then micro-rotation.
class Stepper {
public:
  Stepper(Model model, SchemeConfig cfg) : model_(std::move(model)), cfg_(cfg) {
    model_.params.validate();
    cfg_.validate(model_.params);
  }

  const Model& model() const noexcept { return model_; }
  const SchemeConfig& config() const noexcept { return cfg_; }
  const TorusGrid& grid() const noexcept { return model_.op.grid(); }

  ScalarField chemical_potential(const ScalarField& phi) const {
    return nmagg::chemical_potential(model_.op, phi, model_.pot, model_.params);
  }

  /// Damped Newton on phi^{n+1} for
  ///   (phi' - phi)/tau + div(u phi) = Lap mu',
  ///   mu' = sigma eps (A phi' + E phi) + sigma/eps (F1'(phi') + F2'(phi)) + S (phi' - phi)
  /// where A + E is the interface symbol split into implicit and explicit parts.
  ChResult ch_step(const SimState& s) const {
    const TorusGrid& g = grid();
    const PhysParams& p = model_.params;
    const double tau = cfg_.dt;
    const double c = p.sigma / p.eps_int;
    const double se = p.sigma * p.eps_int;
    const double stab = cfg_.stabilization(p, model_.pot.spec());
    const auto& lam = g.neg_laplacian_symbol();
    const std::size_t ns = g.spectral_size();

    std::vector<double> ahat(ns);
    const auto& imp = model_.op.implicit_symbol(cfg_.nonlocal_split);
    for (std::size_t k = 0; k < ns; ++k) ahat[k] = se * imp[k] + stab;

    // Everything in R that does not depend on phi':
    //   base = -phi^n + tau div(u phi^n) + tau lam g,  g = se E phi^n + c F2'(phi^n) - S phi^n
    const Spectrum phin_hat = to_spectral(s.phi);
    Spectrum adv = ddx(to_spectral(s.u.u1 * s.phi));
    adv += ddy(to_spectral(s.u.u2 * s.phi));
    adv.dealias();
    Spectrum ghat = phin_hat;
    ghat.apply(model_.op.explicit_symbol(cfg_.nonlocal_split));
    ghat *= se;
    {
      ScalarField pw = s.phi.map([&](double v) { return c * model_.pot.dF2(v) - stab * v; });
      ghat += to_spectral(pw);
    }
    Spectrum base(s.phi.grid_ptr());
    for (std::size_t k = 0; k < ns; ++k)
      base[k] = -phin_hat[k] + tau * adv[k] + tau * lam[k] * ghat[k];

    // Convergence is measured on (1 + tau lam A)^-1 R, in units of phi; the raw
    // residual of a stiff local operator has a round-off floor near tau k^4 eps.
    std::vector<double> diag_inv(ns);
    for (std::size_t k = 0; k < ns; ++k) diag_inv[k] = 1.0 / (1.0 + tau * lam[k] * ahat[k]);

    auto residual = [&](const ScalarField& phi, Spectrum& rhat) {
      const Spectrum ph = to_spectral(phi);
      const Spectrum f1 = to_spectral(model_.pot.dF1(phi));
      Spectrum scaled(s.phi.grid_ptr());
      for (std::size_t k = 0; k < ns; ++k) {
        rhat[k] = ph[k] + tau * lam[k] * (ahat[k] * ph[k] + c * f1[k]) + base[k];
        scaled[k] = rhat[k] * diag_inv[k];
      }
      return to_physical(std::move(scaled)).max_abs();
    };

    ScalarField phi = s.phi;
    Spectrum rhat(s.phi.grid_ptr());
    double rnorm = residual(phi, rhat);
    int iter = 0;
    constexpr double bound = 1.0 - 1e-12;
    while (rnorm > cfg_.newton_tol) {
      if (iter == cfg_.newton_max_iter) {
        std::ostringstream os;
        os << "ch: Newton residual " << rnorm << " above tolerance " << cfg_.newton_tol << " after " << iter
           << " iterations";
        throw NewtonDivergence(os.str());
      }
      ++iter;
      const ScalarField d = phi.map([&](double v) { return c * model_.pot.ddF1(v); });
      const Spectrum delta_hat = newton_direction(rhat, d, ahat, tau);
      const ScalarField delta = to_physical(delta_hat);

      double step = 1.0;
      bool feasible = false;
      ScalarField best;
      Spectrum best_r(s.phi.grid_ptr());
      double best_norm = 0.0;
      for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
        ScalarField trial = phi;
        trial.axpy(step, delta);
        if (trial.max_abs() > bound) continue;
        Spectrum trial_r(s.phi.grid_ptr());
        const double tn = residual(trial, trial_r);
        if (!std::isfinite(tn)) continue;
        if (!feasible || tn < best_norm) {
          best = std::move(trial);
          best_r = std::move(trial_r);
          best_norm = tn;
        }
        feasible = true;
        if (tn <= (1.0 - 1e-4 * step) * rnorm || step < 1e-6) break;
      }
      if (!feasible) {
        std::ostringstream os;
        os << "ch: no damped Newton step keeps |phi| <= 1 - 1e-12 (iteration " << iter << ")";
        throw SeparationLoss(os.str());
      }
      phi = std::move(best);
      rhat = std::move(best_r);
      rnorm = best_norm;
    }
    if (!phi.all_finite()) throw NonFiniteError("ch", "ch: non-finite phase field");

    ChResult out;
    out.mu = chemical_potential(phi);
    out.phi = std::move(phi);
    out.newton_iterations = iter;
    out.residual = rnorm;
    return out;
  }

  /// Velocity predictor with the constant split viscosity implicit and the
  /// density frozen at rho(phi^n), then a variable-density projection.
  VectorField2 momentum_step(const SimState& s, const ScalarField& phi_next, const ScalarField& mu_next) {
    const TorusGrid& g = grid();
    const PhysParams& p = model_.params;
    const double tau = cfg_.dt;
    check_cfl(s.u, "momentum");

    const ScalarField rho = density(s.phi, p);
    VectorField2 f = momentum_forces(s.u, s.omega, s.phi, phi_next, mu_next, p);
    for (std::size_t k = 0; k < f.u1.size(); ++k) {
      f.u1[k] /= rho[k];
      f.u2[k] /= rho[k];
    }
    // (u* - u)/tau - (nu_s/rho_min) Lap(u* - u) = f/rho
    const double nu = cfg_.visc_split(p) / p.rho_min();
    const auto& lam = g.neg_laplacian_symbol();
    auto predict = [&](const ScalarField& force, const ScalarField& old) {
      Spectrum h = to_spectral(force);
      h.dealias();
      for (std::size_t k = 0; k < h.size(); ++k) h[k] *= tau / (1.0 + tau * nu * lam[k]);
      ScalarField out = to_physical(std::move(h));
      out += old;
      return out;
    };
    VectorField2 ustar(predict(f.u1, s.u.u1), predict(f.u2, s.u.u2));

    // div(rho^-1 grad psi) = div u*,  u = u* - rho^-1 grad psi
    const ScalarField inv_rho = rho.map([](double r) { return 1.0 / r; });
    const Spectrum psi_hat = solve_pressure(ustar, inv_rho);
    const Spectrum ps = psi_hat;
    VectorField2 gpsi(to_physical(ddx(ps)), to_physical(ddy(ps)));
    for (std::size_t k = 0; k < gpsi.u1.size(); ++k) {
      ustar.u1[k] -= inv_rho[k] * gpsi.u1[k];
      ustar.u2[k] -= inv_rho[k] * gpsi.u2[k];
    }
    VectorField2 u = leray_project(ustar);
    if (!u.all_finite()) throw NonFiniteError("momentum", "momentum: non-finite velocity");
    return u;
  }

  /// Transport, flux and diffusion by the same IMEX pattern, then exact
  /// relaxation of omega towards curl_2 u / 2 at rate 4 eta_r / rho.
  ScalarField microrotation_step(const SimState& s, const ScalarField& mu_next, const VectorField2& u_next) const {
    const TorusGrid& g = grid();
    const PhysParams& p = model_.params;
    const double tau = cfg_.dt;
    check_cfl(u_next, "microrotation");

    const ScalarField rho = density(s.phi, p);
    const VectorField2 gw = grad(s.omega);
    const VectorField2 gmu = grad(mu_next);
    const double rd = p.rho_diff_half();
    ScalarField f(s.omega.grid_ptr());
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double a1 = -rho[k] * u_next.u1[k] + rd * gmu.u1[k];
      const double a2 = -rho[k] * u_next.u2[k] + rd * gmu.u2[k];
      f[k] = a1 * gw.u1[k] + a2 * gw.u2[k];
    }
    f.axpy(p.cda(), laplacian(s.omega));
    for (std::size_t k = 0; k < f.size(); ++k) f[k] /= rho[k];

    const double nu = cfg_.ang_split(p) / p.rho_min();
    const auto& lam = g.neg_laplacian_symbol();
    Spectrum h = to_spectral(f);
    h.dealias();
    for (std::size_t k = 0; k < h.size(); ++k) h[k] *= tau / (1.0 + tau * nu * lam[k]);
    ScalarField w = to_physical(std::move(h));
    w += s.omega;

    if (p.eta_r > 0.0) {
      const ScalarField c = curl2(u_next);
      for (std::size_t k = 0; k < w.size(); ++k) {
        const double target = 0.5 * c[k];
        w[k] = target + (w[k] - target) * std::exp(-4.0 * p.eta_r * tau / rho[k]);
      }
    }
    if (!w.all_finite()) throw NonFiniteError("microrotation", "microrotation: non-finite micro-rotation");
    return w;
  }

  SimState full_step(const SimState& s) {
    ChResult ch = ch_step(s);
    VectorField2 u = momentum_step(s, ch.phi, ch.mu);
    ScalarField w = microrotation_step(s, ch.mu, u);
    SimState next;
    next.t = s.t + cfg_.dt;
    next.u = std::move(u);
    next.omega = std::move(w);
    next.phi = std::move(ch.phi);
    next.mu = std::move(ch.mu);
    last_newton_iterations_ = ch.newton_iterations;
    return next;
  }

  int last_newton_iterations() const noexcept { return last_newton_iterations_; }

private:
  void check_cfl(const VectorField2& u, const char* substep) const {
    const double umax = u.max_abs();
    if (!std::isfinite(umax)) throw NonFiniteError(substep, std::string(substep) + ": non-finite velocity");
    const double cfl = umax * cfg_.dt / grid().spacing();
    if (cfl > cfg_.cfl_max) {
      std::ostringstream os;
      os << substep << ": CFL number " << cfl << " exceeds cfl_max = " << cfg_.cfl_max;
      throw CFLViolation(substep, os.str());
    }
  }

  /// Solves J delta = -R with J = I + tau Lap'(A + D), Lap' = -Lap.
  /// Modes annihilated by the Laplacian take delta = -R; on the rest the
  /// equivalent SPD system (1/lam + tau (A + D)) delta = -R/lam is solved by PCG.
  Spectrum newton_direction(const Spectrum& rhat, const ScalarField& d, const std::vector<double>& ahat,
                            double tau) const {
    const TorusGrid& g = grid();
    const auto& lam = g.neg_laplacian_symbol();
    const std::size_t ns = g.spectral_size();
    const double dbar = d.mean();

    Spectrum x(rhat.grid_ptr());
    Spectrum b(rhat.grid_ptr());
    std::vector<double> precond(ns, 0.0);
    for (std::size_t k = 0; k < ns; ++k) {
      if (lam[k] == 0.0) {
        x[k] = -rhat[k];
        continue;
      }
      b[k] = -rhat[k] / lam[k];
      precond[k] = 1.0 / (1.0 / lam[k] + tau * (ahat[k] + dbar));
    }
    auto apply = [&](const Spectrum& v) {
      Spectrum out = to_spectral(d * to_physical(v));
      for (std::size_t k = 0; k < ns; ++k)
        out[k] = lam[k] == 0.0 ? Complex(0.0) : v[k] / lam[k] + tau * (ahat[k] * v[k] + out[k]);
      return out;
    };
    Spectrum y(rhat.grid_ptr());
    // Inexact direction; convergence is still judged on the residual R.
    pcg(apply, b, precond, y, 1e-4, 500);
    for (std::size_t k = 0; k < ns; ++k)
      if (lam[k] != 0.0) x[k] = y[k];
    return x;
  }

  Spectrum solve_pressure(const VectorField2& ustar, const ScalarField& inv_rho) {
    const TorusGrid& g = grid();
    const auto& lam = g.neg_laplacian_symbol();
    const std::size_t ns = g.spectral_size();
    // -div(inv_rho grad psi) = -div u*
    Spectrum b = ddx(to_spectral(ustar.u1));
    b += ddy(to_spectral(ustar.u2));
    b *= -1.0;
    const double scale = inv_rho.mean();
    std::vector<double> precond(ns, 0.0);
    for (std::size_t k = 0; k < ns; ++k) {
      if (lam[k] == 0.0)
        b[k] = 0.0;
      else
        precond[k] = 1.0 / (scale * lam[k]);
    }
    auto apply = [&](const Spectrum& v) {
      ScalarField f1 = inv_rho * to_physical(ddx(v));
      ScalarField f2 = inv_rho * to_physical(ddy(v));
      Spectrum out = ddx(to_spectral(f1));
      out += ddy(to_spectral(f2));
      out *= -1.0;
      for (std::size_t k = 0; k < ns; ++k)
        if (lam[k] == 0.0) out[k] = 0.0;
      return out;
    };
    if (psi_cache_.size() != ns || !psi_cache_.grid().same_as(g)) psi_cache_ = Spectrum(ustar.grid_ptr());
    // The Leray step removes what divergence this tolerance leaves behind.
    pcg(apply, b, precond, psi_cache_, 1e-7, 500);
    return psi_cache_;
  }

  /// Preconditioned CG in spectral space with the physical L2 inner product.
  /// Modes with zero preconditioner weight are held at zero.
  template <class Apply>
  static int pcg(Apply&& apply, const Spectrum& b, const std::vector<double>& precond, Spectrum& x, double rtol,
                 int max_iter) {
    const double bnorm2 = spectral_inner(b, b);
    if (bnorm2 == 0.0) {
      x *= 0.0;
      return 0;
    }
    Spectrum r = b;
    r -= apply(x);
    Spectrum z = r;
    z.apply(precond);
    Spectrum dir = z;
    double rz = spectral_inner(r, z);
    const double target = rtol * rtol * bnorm2;
    int it = 0;
    while (spectral_inner(r, r) > target && it < max_iter) {
      const Spectrum q = apply(dir);
      const double dq = spectral_inner(dir, q);
      if (!(dq > 0.0)) break;
      const double alpha = rz / dq;
      x.axpy(alpha, dir);
      r.axpy(-alpha, q);
      z = r;
      z.apply(precond);
      const double rz_new = spectral_inner(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t k = 0; k < dir.size(); ++k) dir[k] = z[k] + beta * dir[k];
      ++it;
    }
    return it;
  }

  Model model_;
  SchemeConfig cfg_;
  Spectrum psi_cache_;
  int last_newton_iterations_ = 0;
};

/// Builds a consistent initial state (mu from phi).
inline SimState make_state(const Stepper& stepper, VectorField2 u, ScalarField omega, ScalarField phi,
                           double t = 0.0) {
  SimState s;
  s.t = t;
  s.mu = stepper.chemical_potential(phi);
  s.u = std::move(u);
  s.omega = std::move(omega);
  s.phi = std::move(phi);
  return s;
}

} // namespace nmagg
