#pragma once

#include "errors.hpp"
#include "field.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nmagg {

/// Logarithmic double-well F = F1 + F2 with
///   F1(s) = theta/2 [(1+s) ln(1+s) + (1-s) ln(1-s)],  F2(s) = -theta_c/2 s^2.
struct PotentialSpec {
  double theta = 0.8;
  double theta_c = 1.0;
  /// Selects the polynomial regularization F_eps when set.
  std::optional<double> reg_epsilon;
  int reg_order = 4;

  void validate() const {
    if (!(theta > 0.0) || !(theta < theta_c)) {
      std::ostringstream os;
      os << "potential: require 0 < theta < theta_c, got theta = " << theta << ", theta_c = " << theta_c;
      throw ParameterError(os.str());
    }
    if (reg_epsilon) validate_regularization();
  }

  void validate_regularization() const {
    if (!reg_epsilon || !(*reg_epsilon > 0.0) || !(*reg_epsilon < 1.0))
      throw ParameterError("potential: reg_epsilon must lie in (0, 1)");
    if (reg_order < 4 || reg_order % 2 != 0)
      throw ParameterError("potential: reg_order must be an even integer >= 4, got " +
                           std::to_string(reg_order));
  }
};

class Potential {
public:
  /// Singular or regularized according to spec.reg_epsilon.
  explicit Potential(const PotentialSpec& spec) : spec_(spec) {
    if (spec_.reg_epsilon) {
      spec_.validate_regularization();
      clamp_ = 1.0 - *spec_.reg_epsilon;
      for (int k = 0; k <= spec_.reg_order; ++k) taylor_.push_back(singular_derivative(k, clamp_));
    }
  }

  const PotentialSpec& spec() const noexcept { return spec_; }
  bool regularized() const noexcept { return spec_.reg_epsilon.has_value(); }
  double theta() const noexcept { return spec_.theta; }
  double theta_c() const noexcept { return spec_.theta_c; }

  /// k-th derivative of the singular F1 at s in (-1, 1).
  double singular_derivative(int k, double s) const {
    const double th = spec_.theta;
    switch (k) {
    case 0: {
      // (1 -+ s) ln(1 -+ s) -> 0 at the endpoints
      const double plus = (1.0 + s) == 0.0 ? 0.0 : (1.0 + s) * std::log1p(s);
      const double minus = (1.0 - s) == 0.0 ? 0.0 : (1.0 - s) * std::log1p(-s);
      return 0.5 * th * (plus + minus);
    }
    case 1:
      return th * std::atanh(s);
    default: {
      double fact = 1.0;
      for (int i = 2; i <= k - 2; ++i) fact *= i;
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      return 0.5 * th * fact * (sign * std::pow(1.0 + s, -(k - 1)) + std::pow(1.0 - s, -(k - 1)));
    }
    }
  }

  /// j-th derivative of F1 (or F1_eps), j in {0, 1, 2}.
  double f1_derivative(int j, double s) const {
    if (!regularized()) {
      check_domain(s);
      return singular_derivative(j, s);
    }
    if (std::abs(s) <= clamp_) return singular_derivative(j, s);
    // Taylor polynomial about +-clamp with the p-th derivative frozen.
    const double sign = s > 0.0 ? 1.0 : -1.0;
    const double base = sign * clamp_;
    const double ds = s - base;
    const int p = spec_.reg_order;
    double sum = 0.0;
    double power = 1.0;
    double fact = 1.0;
    for (int k = j; k <= p; ++k) {
      if (k > j) {
        power *= ds;
        fact *= (k - j);
      }
      // F1^(k) is even for even k and odd for odd k.
      const double deriv = (k % 2 == 0 || sign > 0.0) ? taylor_[k] : -taylor_[k];
      sum += deriv * power / fact;
    }
    return sum;
  }

  double F1(double s) const { return f1_derivative(0, s); }
  double dF1(double s) const { return f1_derivative(1, s); }
  double ddF1(double s) const { return f1_derivative(2, s); }

  double F2(double s) const noexcept { return -0.5 * spec_.theta_c * s * s; }
  double dF2(double s) const noexcept { return -spec_.theta_c * s; }
  double ddF2(double) const noexcept { return -spec_.theta_c; }

  double F(double s) const { return F1(s) + F2(s); }
  double dF(double s) const { return dF1(s) + dF2(s); }
  double ddF(double s) const { return ddF1(s) + ddF2(s); }

  ScalarField dF1(const ScalarField& phi) const {
    return phi.map([this](double s) { return dF1(s); });
  }
  ScalarField ddF1(const ScalarField& phi) const {
    return phi.map([this](double s) { return ddF1(s); });
  }
  ScalarField dF(const ScalarField& phi) const {
    return phi.map([this](double s) { return dF(s); });
  }
  double integral_F(const ScalarField& phi) const {
    double sum = 0.0;
    for (double s : phi.values()) sum += F(s);
    return sum * phi.grid().cell_area();
  }

private:
  void check_domain(double s) const {
    if (!(std::abs(s) < 1.0)) {
      std::ostringstream os;
      os << "potential: |s| >= 1 (s = " << s << ") where the singular potential is +infinity";
      throw DomainError(os.str());
    }
  }

  PotentialSpec spec_;
  double clamp_ = 1.0;
  std::vector<double> taylor_;
};

/// Regularized evaluator F_eps = F1_eps + F2.
inline Potential build_regularized(const PotentialSpec& spec) {
  if (!spec.reg_epsilon) throw ParameterError("potential: build_regularized needs reg_epsilon");
  spec.validate_regularization();
  return Potential(spec);
}

/// alpha_hat = inf_s F''(s) + a = theta - theta_c + a (F1'' attains theta at s = 0).
inline double check_coercivity(const PotentialSpec& spec, double a_const) {
  if (a_const < 0.0) throw ParameterError("potential: a_const must be nonnegative");
  const double alpha = spec.theta - spec.theta_c + a_const;
  if (!(alpha > 0.0)) {
    std::ostringstream os;
    os << "potential.coercivity: theta - theta_c + a = " << alpha << " <= 0";
    throw CoercivityError(os.str());
  }
  return alpha;
}

/// Sampled check that F'' is non-decreasing on [1 - eps1, 1 - tail).
inline bool second_derivative_monotone_near_one(const Potential& pot, double eps1, int samples = 400,
                                                double tail = 1e-9) {
  double prev = pot.ddF(1.0 - eps1);
  for (int k = 1; k <= samples; ++k) {
    const double s = 1.0 - eps1 + (eps1 - tail) * static_cast<double>(k) / samples;
    const double cur = pot.ddF(s);
    if (cur < prev) return false;
    prev = cur;
  }
  return true;
}

} // namespace nmagg
