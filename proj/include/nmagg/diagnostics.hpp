#pragma once

#include "stepper.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace nmagg {

struct EnergyReport {
  double t = 0.0;
  double e_kinetic = 0.0;
  double e_rotation = 0.0;
  double e_nonlocal = 0.0;
  double e_potential = 0.0;
  double e_total = 0.0;
  double d_mu = 0.0;
  double d_visc = 0.0;
  double d_curl = 0.0;
  double d_ang = 0.0;
  double d_total = 0.0;
  double mass = 0.0;
  double phi_max = 0.0;
};

/// Energy E = int rho (|u|^2 + omega^2)/2 + sigma eps e(phi) + sigma/eps int F(phi)
/// and dissipation D = int |grad mu|^2 + 2 eta |Du|^2 + 4 eta_r (curl_2 u / 2 - omega)^2
/// + c_da |grad omega|^2.
inline EnergyReport energy_report(const SimState& s, const InterfaceOperator& op, const Potential& pot,
                                  const PhysParams& p) {
  const ScalarField rho = density(s.phi, p);
  const ScalarField eta = coeff(s.phi, p.eta1, p.eta2);
  const StrainTensors st = strain_tensors(s.u);
  const VectorField2 gmu = grad(s.mu);
  const VectorField2 gw = grad(s.omega);
  const double da = s.phi.grid().cell_area();

  EnergyReport r;
  r.t = s.t;
  double ek = 0.0, er = 0.0, dv = 0.0, dc = 0.0;
  for (std::size_t k = 0; k < s.phi.size(); ++k) {
    const double u1 = s.u.u1[k], u2 = s.u.u2[k], w = s.omega[k];
    ek += rho[k] * (u1 * u1 + u2 * u2);
    er += rho[k] * w * w;
    const double d11 = st.d11[k], d12 = st.d12[k], d22 = st.d22[k];
    dv += eta[k] * (d11 * d11 + 2.0 * d12 * d12 + d22 * d22);
    // curl_2 u / 2 = W_12
    const double gap = st.w12[k] - w;
    dc += gap * gap;
  }
  r.e_kinetic = 0.5 * ek * da;
  r.e_rotation = 0.5 * er * da;
  r.e_nonlocal = p.sigma * p.eps_int * op.energy(s.phi);
  r.e_potential = p.sigma / p.eps_int * pot.integral_F(s.phi);
  r.e_total = r.e_kinetic + r.e_rotation + r.e_nonlocal + r.e_potential;
  r.d_mu = inner(gmu, gmu);
  r.d_visc = 2.0 * dv * da;
  r.d_curl = 4.0 * p.eta_r * dc * da;
  r.d_ang = p.cda() * inner(gw, gw);
  r.d_total = r.d_mu + r.d_visc + r.d_curl + r.d_ang;
  r.mass = s.phi.mean();
  r.phi_max = s.phi.max_abs();
  return r;
}

struct EnergyLawResidual {
  /// r_n = (E_{n+1} - E_n)/(t_{n+1} - t_n) + D_{n+1}
  std::vector<double> series;
  double max = 0.0;
  double max_abs = 0.0;
  double mean = 0.0;
};

inline EnergyLawResidual energy_law_residual(const std::vector<EnergyReport>& reports) {
  EnergyLawResidual out;
  if (reports.size() < 2) return out;
  out.series.reserve(reports.size() - 1);
  for (std::size_t n = 0; n + 1 < reports.size(); ++n) {
    const double dt = reports[n + 1].t - reports[n].t;
    if (!(dt > 0.0)) throw MismatchError("energy_law_residual: report times must increase");
    out.series.push_back((reports[n + 1].e_total - reports[n].e_total) / dt + reports[n + 1].d_total);
  }
  out.max = *std::max_element(out.series.begin(), out.series.end());
  double sum = 0.0;
  for (double v : out.series) {
    out.max_abs = std::max(out.max_abs, std::abs(v));
    sum += v;
  }
  out.mean = sum / static_cast<double>(out.series.size());
  return out;
}

struct Snapshot {
  double t = 0.0;
  VectorField2 u;
  ScalarField omega;
  ScalarField phi;
};

using Trajectory = std::vector<Snapshot>;

/// max over snapshots of |u_w - u_ref|^2 + |omega_w|^2 + |phi_w - phi_ref|^2.
inline double consistency_metric(const Trajectory& run_w, const Trajectory& run_ref) {
  if (run_w.size() != run_ref.size())
    throw MismatchError("consistency_metric: trajectories hold different snapshot counts");
  double metric = 0.0;
  for (std::size_t k = 0; k < run_w.size(); ++k) {
    const Snapshot& a = run_w[k];
    const Snapshot& b = run_ref[k];
    if (!a.phi.grid().same_as(b.phi.grid()))
      throw MismatchError("consistency_metric: trajectories live on different grids");
    if (std::abs(a.t - b.t) > 1e-12 * std::max(1.0, std::abs(a.t)))
      throw MismatchError("consistency_metric: snapshot times differ");
    const VectorField2 du = a.u - b.u;
    const ScalarField dphi = a.phi - b.phi;
    const double value = inner(du, du) + inner(a.omega, a.omega) + inner(dphi, dphi);
    metric = std::max(metric, value);
  }
  return metric;
}

/// Mean-free p with grad p equal to the gradient part of the momentum forces.
inline ScalarField pressure_diagnostic(const SimState& s, const PhysParams& p) {
  const VectorField2 f = momentum_forces(s.u, s.omega, s.phi, s.phi, s.mu, p);
  Spectrum div = ddx(to_spectral(f.u1));
  div += ddy(to_spectral(f.u2));
  const auto& lam = s.phi.grid().neg_laplacian_symbol();
  // Lap p = div f
  for (std::size_t k = 0; k < div.size(); ++k) div[k] = lam[k] == 0.0 ? Complex(0.0) : -div[k] / lam[k];
  return to_physical(std::move(div));
}

} // namespace nmagg
