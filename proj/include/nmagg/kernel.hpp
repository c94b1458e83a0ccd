#pragma once

#include "field.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace nmagg {

enum class KernelFamily { disk_profile, custom_profile };

inline const char* to_string(KernelFamily f) {
  return f == KernelFamily::disk_profile ? "disk" : "custom";
}

/// Radial profile rho(s) on s in [0, 1], tabulated at equispaced nodes and
/// linearly interpolated. The scaled kernel is
///   K_kappa(x) = kappa^-2 rho(|x|/kappa) / |x|^2,   |x| < kappa.
struct RadialProfile {
  std::vector<double> samples;

  double operator()(double s) const {
    if (s < 0.0 || s >= 1.0 || samples.size() < 2) return 0.0;
    const double pos = s * static_cast<double>(samples.size() - 1);
    const auto k = static_cast<std::size_t>(pos);
    const double t = pos - static_cast<double>(k);
    return (1.0 - t) * samples[k] + t * samples[std::min(k + 1, samples.size() - 1)];
  }
};

/// Scaled interaction kernel sampled on a grid, with its Fourier symbol.
/// Immutable after construction.
class KernelSpec {
public:
  KernelFamily family() const noexcept { return family_; }
  double kappa() const noexcept { return kappa_; }
  /// a = integral of K over the torus = symbol at wavenumber zero.
  double a_const() const noexcept { return a_; }
  /// Scalar applied to the raw samples to impose the second-moment
  /// normalization on the discrete kernel.
  double renormalization() const noexcept { return renorm_; }
  /// Largest |Im K^| relative to max |K^| before the imaginary part was dropped.
  double symbol_imag_ratio() const noexcept { return imag_ratio_; }

  const TorusGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  /// K^ in the r2c layout, scaled so that K * f = IDFT(K^ f^).
  const std::vector<double>& fourier_symbol() const noexcept { return symbol_; }
  /// Renormalized samples K(x_ij), centered at the origin with periodic wrap.
  const ScalarField& samples() const noexcept { return samples_; }

  /// Symbol at mode (mx, my), mx, my >= 0.
  double symbol_at(std::size_t mx, std::size_t my) const {
    return symbol_[mx * grid_->nh() + my];
  }

private:
  friend KernelSpec build_kernel(KernelFamily, double, const GridPtr&, const RadialProfile&);

  KernelFamily family_ = KernelFamily::disk_profile;
  double kappa_ = 0.0;
  double a_ = 0.0;
  double renorm_ = 1.0;
  double imag_ratio_ = 0.0;
  GridPtr grid_;
  std::vector<double> symbol_;
  ScalarField samples_;
};

/// Continuum normalization: integral_0^inf gamma(r) r dr = 2 / C_2 with C_2 = pi.
inline constexpr double kC1Moment = 2.0 / std::numbers::pi;

/// Builds K_kappa on `grid`. The disk profile rho(s) = (8/pi) s^2 on [0, 1)
/// gives the bounded kernel K = (8/pi) kappa^-4 inside the disk of radius kappa.
/// Custom profiles take K(0) = 0; the origin sample drops out of a phi - K*phi.
inline KernelSpec build_kernel(KernelFamily family, double kappa, const GridPtr& grid,
                               const RadialProfile& profile = {}) {
  const double length = grid->period_length();
  const double support_limit = std::min(1.0, 0.5 * length);
  if (!(kappa > 0.0) || kappa >= support_limit)
    throw KernelSupportError("kernel: kappa = " + std::to_string(kappa) +
                             " outside (0, min(1, L/2)) = (0, " + std::to_string(support_limit) + ")");
  const double h = grid->spacing();
  if (kappa < 4.0 * h)
    throw ResolutionError("kernel: kappa = " + std::to_string(kappa) +
                          " is below the 4-cell resolution floor 4 L/n = " + std::to_string(4.0 * h));
  if (family == KernelFamily::custom_profile && profile.samples.size() < 2)
    throw ParameterError("kernel: custom profile needs at least two samples");

  const std::size_t n = grid->n();
  ScalarField k_samples(grid);
  const double disk_height = 8.0 / std::numbers::pi / std::pow(kappa, 4);
  double moment = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(grid->mode(i)) * h;
    for (std::size_t j = 0; j < n; ++j) {
      const double y = static_cast<double>(grid->mode(j)) * h;
      const double r = std::hypot(x, y);
      double value = 0.0;
      if (r < kappa) {
        if (family == KernelFamily::disk_profile)
          value = disk_height;
        else if (r > 0.0)
          value = profile(r / kappa) / (kappa * kappa * r * r);
      }
      k_samples(i, j) = value;
      moment += value * x * x;
    }
  }
  moment *= grid->cell_area();
  if (!(moment > 0.0)) throw ParameterError("kernel: profile has no mass inside the support");

  // integral K x1^2 dx = pi * integral gamma(r) r dr for radial K in 2D.
  const double renorm = kC1Moment / (moment / std::numbers::pi);
  k_samples *= renorm;

  Spectrum s = to_spectral(k_samples);
  double max_abs = 0.0;
  double max_imag = 0.0;
  KernelSpec spec;
  spec.symbol_.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Complex c = s[k] * grid->cell_area();
    spec.symbol_[k] = c.real();
    max_abs = std::max(max_abs, std::abs(c));
    max_imag = std::max(max_imag, std::abs(c.imag()));
  }
  spec.family_ = family;
  spec.kappa_ = kappa;
  spec.renorm_ = renorm;
  spec.imag_ratio_ = max_abs > 0.0 ? max_imag / max_abs : 0.0;
  spec.a_ = spec.symbol_[0];
  spec.grid_ = grid;
  spec.samples_ = std::move(k_samples);
  return spec;
}

inline Spectrum convolve(const KernelSpec& kernel, Spectrum s) {
  require_same_grid(kernel.grid(), s.grid(), "convolve");
  return s.apply(kernel.fourier_symbol());
}

inline ScalarField convolve(const KernelSpec& kernel, const ScalarField& f) {
  require_same_grid(kernel.grid(), f.grid(), "convolve");
  return to_physical(convolve(kernel, to_spectral(f)));
}

/// e(phi) = 1/2 int a phi^2 - phi (K * phi) dx, evaluated mode by mode so the
/// mean of phi cancels exactly.
inline double nonlocal_energy(const KernelSpec& kernel, const ScalarField& phi) {
  require_same_grid(kernel.grid(), phi.grid(), "nonlocal_energy");
  const Spectrum p = to_spectral(phi);
  Spectrum q = p;
  const auto& sym = kernel.fourier_symbol();
  const double a = kernel.a_const();
  for (std::size_t k = 0; k < q.size(); ++k) q[k] *= (a - sym[k]);
  return 0.5 * spectral_inner(p, q);
}

/// e_0(phi) = 1/2 int |grad phi|^2 dx
inline double local_energy(const ScalarField& phi) {
  const VectorField2 g = grad(phi);
  return 0.5 * (inner(g.u1, g.u1) + inner(g.u2, g.u2));
}

struct KappaRow {
  double kappa = 0.0;
  double e_kappa = 0.0;
  double e_0 = 0.0;
  double rel_gap = 0.0;
  /// |int (a phi - K*phi) zeta - int grad phi . grad zeta|
  double op_gap = 0.0;
};

inline double relative_gap(double value, double reference) {
  if (reference == 0.0) return value == 0.0 ? 0.0 : std::abs(value);
  return std::abs(value - reference) / std::abs(reference);
}

/// Nonlocal-to-local functional table for decreasing kappa.
inline std::vector<KappaRow> kappa_limit_table(const ScalarField& phi, const std::vector<double>& kappas,
                                               const ScalarField& zeta,
                                               KernelFamily family = KernelFamily::disk_profile,
                                               const RadialProfile& profile = {}) {
  for (std::size_t i = 1; i < kappas.size(); ++i)
    if (!(kappas[i] < kappas[i - 1]))
      throw ParameterError("kappa_limit_table: kappa values must be strictly decreasing");

  const double e0 = local_energy(phi);
  const VectorField2 gp = grad(phi);
  const VectorField2 gz = grad(zeta);
  const double local_form = inner(gp, gz);

  std::vector<KappaRow> rows;
  rows.reserve(kappas.size());
  for (double kappa : kappas) {
    const KernelSpec kernel = build_kernel(family, kappa, phi.grid_ptr(), profile);
    ScalarField nonlocal_op = phi * kernel.a_const();
    nonlocal_op -= convolve(kernel, phi);
    KappaRow row;
    row.kappa = kappa;
    row.e_kappa = nonlocal_energy(kernel, phi);
    row.e_0 = e0;
    row.rel_gap = relative_gap(row.e_kappa, e0);
    row.op_gap = std::abs(inner(nonlocal_op, zeta) - local_form);
    rows.push_back(row);
  }
  return rows;
}

} // namespace nmagg
