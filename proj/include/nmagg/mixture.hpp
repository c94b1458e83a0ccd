#pragma once

#include "kernel.hpp"
#include "potential.hpp"
#include "spectral.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <sstream>

namespace nmagg {

/// Constituent material parameters. Viscosities and densities are
/// interpolated affinely in phi; eta_r, c_d, c_a are scalars.
struct PhysParams {
  double rho1 = 1.0;
  double rho2 = 0.5;
  double eta1 = 0.1;
  double eta2 = 0.05;
  double eta_r = 0.05;
  double cd = 0.05;
  double ca = 0.05;
  /// Enters only the 3D model: the c0 div(omega) term vanishes for the planar
  /// reduction, so it is carried for config fidelity and never read.
  double c0 = 0.05;
  double mobility = 1.0;
  double sigma = 1.0;
  double eps_int = 1.0;

  double rho_diff_half() const noexcept { return 0.5 * (rho1 - rho2); }
  double rho_min() const noexcept { return std::min(rho1, rho2); }
  double rho_max() const noexcept { return std::max(rho1, rho2); }
  double eta_max() const noexcept { return std::max(eta1, eta2); }
  double cda() const noexcept { return cd + ca; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ParameterError(std::string("physics: ") + name + " must be positive");
    };
    positive(rho1, "rho1");
    positive(rho2, "rho2");
    positive(eta1, "eta1");
    positive(eta2, "eta2");
    positive(cd, "cd");
    positive(ca, "ca");
    positive(c0, "c0");
    positive(sigma, "sigma");
    positive(eps_int, "eps_int");
    if (!(eta_r >= 0.0) || !std::isfinite(eta_r)) throw ParameterError("physics: eta_r must be >= 0");
    if (mobility != 1.0) throw ParameterError("physics: mobility is fixed to 1");
  }
};

/// rho(phi) = (rho1 + rho2)/2 + (rho1 - rho2)/2 phi
inline ScalarField density(const ScalarField& phi, const PhysParams& p) {
  if (phi.max_abs() > 1.0) throw RangeError("density: |phi| > 1 on the grid");
  const double mid = 0.5 * (p.rho1 + p.rho2);
  const double slope = p.rho_diff_half();
  return phi.map([=](double s) { return mid + slope * s; });
}

/// Affine interpolation between f1 (phi = 1) and f2 (phi = -1), clamped to
/// [min(f1, f2), max(f1, f2)].
inline double coeff(double phi, double f1, double f2) noexcept {
  const double v = 0.5 * (f1 + f2) + 0.5 * (f1 - f2) * phi;
  return std::clamp(v, std::min(f1, f2), std::max(f1, f2));
}

inline ScalarField coeff(const ScalarField& phi, double f1, double f2) {
  return phi.map([=](double s) { return coeff(s, f1, f2); });
}

enum class NonlocalSplit { implicit, explicit_convolution };

inline const char* to_string(NonlocalSplit s) {
  return s == NonlocalSplit::implicit ? "implicit" : "explicit_convolution";
}

/// The interface operator entering mu = sigma eps L(phi) + sigma/eps F'(phi):
/// nonlocal L = a phi - K * phi, or the local limit L = -Laplacian(phi).
/// Both are Fourier multipliers; the stepper treats `implicit_symbol`
/// implicitly and `explicit_symbol` explicitly.
class InterfaceOperator {
public:
  static InterfaceOperator nonlocal(std::shared_ptr<const KernelSpec> kernel) {
    InterfaceOperator op;
    const auto& sym = kernel->fourier_symbol();
    op.grid_ = kernel->grid_ptr();
    op.symbol_.resize(sym.size());
    op.split_implicit_.assign(sym.size(), kernel->a_const());
    op.split_explicit_.resize(sym.size());
    for (std::size_t k = 0; k < sym.size(); ++k) {
      op.symbol_[k] = kernel->a_const() - sym[k];
      op.split_explicit_[k] = -sym[k];
    }
    op.zero_.assign(sym.size(), 0.0);
    op.kernel_ = std::move(kernel);
    return op;
  }

  static InterfaceOperator local(const GridPtr& grid) {
    InterfaceOperator op;
    op.grid_ = grid;
    op.symbol_ = grid->neg_laplacian_symbol();
    op.zero_.assign(op.symbol_.size(), 0.0);
    return op;
  }

  bool is_local() const noexcept { return !kernel_; }
  const KernelSpec* kernel() const noexcept { return kernel_.get(); }
  double a_const() const noexcept { return kernel_ ? kernel_->a_const() : 0.0; }
  const TorusGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }

  const std::vector<double>& symbol() const noexcept { return symbol_; }
  /// With explicit_convolution the nonlocal operator splits as a phi implicit,
  /// -K * phi explicit; the local operator is always fully implicit.
  const std::vector<double>& implicit_symbol(NonlocalSplit split) const noexcept {
    return kernel_ && split == NonlocalSplit::explicit_convolution ? split_implicit_ : symbol_;
  }
  const std::vector<double>& explicit_symbol(NonlocalSplit split) const noexcept {
    return kernel_ && split == NonlocalSplit::explicit_convolution ? split_explicit_ : zero_;
  }

  ScalarField apply(const ScalarField& phi) const {
    require_same_grid(*grid_, phi.grid(), "InterfaceOperator");
    return to_physical(to_spectral(phi).apply(symbol_));
  }

  /// e(phi) for the nonlocal operator, e_0(phi) for the local one.
  double energy(const ScalarField& phi) const {
    if (kernel_) return nonlocal_energy(*kernel_, phi);
    return local_energy(phi);
  }

private:
  InterfaceOperator() = default;

  GridPtr grid_;
  std::shared_ptr<const KernelSpec> kernel_;
  std::vector<double> symbol_;
  std::vector<double> split_implicit_;
  std::vector<double> split_explicit_;
  std::vector<double> zero_;
};

/// mu = sigma eps L(phi) + sigma/eps F'(phi)
inline ScalarField chemical_potential(const InterfaceOperator& op, const ScalarField& phi,
                                      const Potential& pot, const PhysParams& p) {
  ScalarField mu = op.apply(phi);
  mu *= p.sigma * p.eps_int;
  const double c = p.sigma / p.eps_int;
  for (std::size_t k = 0; k < mu.size(); ++k) mu[k] += c * pot.dF(phi[k]);
  return mu;
}

/// mu = sigma eps (a phi - K * phi) + sigma/eps F'(phi)
inline ScalarField chemical_potential(const KernelSpec& kernel, const ScalarField& phi,
                                      const PotentialSpec& pot, const PhysParams& p) {
  ScalarField mu = phi * kernel.a_const();
  mu -= convolve(kernel, phi);
  mu *= p.sigma * p.eps_int;
  const Potential evaluator(pot);
  const double c = p.sigma / p.eps_int;
  for (std::size_t k = 0; k < mu.size(); ++k) mu[k] += c * evaluator.dF(phi[k]);
  return mu;
}

/// J = -rho'(phi) m grad mu with m = 1.
inline VectorField2 relative_flux(const ScalarField& mu, const PhysParams& p) {
  VectorField2 j = grad(mu);
  j *= -p.rho_diff_half();
  return j;
}

/// The evolving planar state. mu is kept consistent with phi.
struct SimState {
  double t = 0.0;
  VectorField2 u;
  ScalarField omega;
  ScalarField phi;
  ScalarField mu;
};

} // namespace nmagg
