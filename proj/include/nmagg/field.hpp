#pragma once

#include "errors.hpp"
#include "grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <utility>

namespace nmagg {

/// Tag for field storage that the caller fills completely.
struct Uninitialized {};
inline constexpr Uninitialized uninitialized{};

inline void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* where) {
  if (!a.same_as(b))
    throw GridMismatchError(std::string(where) + ": fields live on different grids");
}

/// Real samples f(x_i, y_j) on a TorusGrid.
class ScalarField {
public:
  ScalarField() = default;
  explicit ScalarField(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)), values_(grid_->size(), fill) {}
  /// Storage the caller overwrites in full before reading.
  ScalarField(GridPtr grid, Uninitialized) : grid_(std::move(grid)), values_(grid_->size()) {}

  template <class Fn>
  static ScalarField from_function(GridPtr grid, Fn&& f) {
    ScalarField out(std::move(grid));
    const std::size_t n = out.grid().n();
    const double h = out.grid().spacing();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        out(i, j) = f(static_cast<double>(i) * h, static_cast<double>(j) * h);
    return out;
  }

  const TorusGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  bool empty() const noexcept { return !grid_; }

  std::size_t size() const noexcept { return values_.size(); }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  double& operator[](std::size_t k) noexcept { return values_[k]; }
  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * grid_->n() + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * grid_->n() + j]; }

  ScalarField& operator+=(const ScalarField& o) {
    require_same_grid(grid(), o.grid(), "ScalarField +=");
    for (std::size_t k = 0; k < size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    require_same_grid(grid(), o.grid(), "ScalarField -=");
    for (std::size_t k = 0; k < size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
  }
  ScalarField& operator+=(double s) noexcept {
    for (double& v : values_) v += s;
    return *this;
  }

  /// this += s * o
  ScalarField& axpy(double s, const ScalarField& o) {
    require_same_grid(grid(), o.grid(), "ScalarField axpy");
    for (std::size_t k = 0; k < size(); ++k) values_[k] += s * o.values_[k];
    return *this;
  }

  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(ScalarField a, double s) { return a *= s; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  /// Pointwise product.
  friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid(), "ScalarField *");
    ScalarField out(a.grid_, uninitialized);
    for (std::size_t k = 0; k < a.size(); ++k) out.values_[k] = a.values_[k] * b.values_[k];
    return out;
  }

  template <class Fn>
  ScalarField map(Fn&& f) const {
    ScalarField out(grid_, uninitialized);
    for (std::size_t k = 0; k < size(); ++k) out.values_[k] = f(values_[k]);
    return out;
  }

  /// (L/n)^2 sum of samples; exact for trigonometric polynomials below Nyquist.
  double integral() const noexcept {
    return grid_->cell_area() * std::accumulate(values_.begin(), values_.end(), 0.0);
  }
  double mean() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(size());
  }
  double max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }
  double min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
  double max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }
  /// Discrete L2 norm (integral of f^2)^(1/2).
  double l2_norm() const noexcept { return std::sqrt(inner(*this, *this)); }
  bool all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  friend double inner(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid(), b.grid(), "inner");
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a.values_[k] * b.values_[k];
    return s * a.grid().cell_area();
  }

private:
  GridPtr grid_;
  AlignedVector<double> values_;
};

struct VectorField2 {
  ScalarField u1;
  ScalarField u2;

  VectorField2() = default;
  explicit VectorField2(const GridPtr& grid) : u1(grid), u2(grid) {}
  VectorField2(ScalarField a, ScalarField b) : u1(std::move(a)), u2(std::move(b)) {
    require_same_grid(u1.grid(), u2.grid(), "VectorField2");
  }

  const TorusGrid& grid() const noexcept { return u1.grid(); }
  const GridPtr& grid_ptr() const noexcept { return u1.grid_ptr(); }
  bool empty() const noexcept { return u1.empty(); }

  VectorField2& operator+=(const VectorField2& o) { u1 += o.u1; u2 += o.u2; return *this; }
  VectorField2& operator-=(const VectorField2& o) { u1 -= o.u1; u2 -= o.u2; return *this; }
  VectorField2& operator*=(double s) { u1 *= s; u2 *= s; return *this; }
  friend VectorField2 operator+(VectorField2 a, const VectorField2& b) { return a += b; }
  friend VectorField2 operator-(VectorField2 a, const VectorField2& b) { return a -= b; }
  friend VectorField2 operator*(VectorField2 a, double s) { return a *= s; }
  friend VectorField2 operator*(double s, VectorField2 a) { return a *= s; }

  double max_abs() const noexcept {
    double m = 0.0;
    for (std::size_t k = 0; k < u1.size(); ++k) m = std::max(m, std::sqrt(u1[k] * u1[k] + u2[k] * u2[k]));
    return m;
  }
  double l2_norm() const noexcept { return std::sqrt(inner(u1, u1) + inner(u2, u2)); }
  bool all_finite() const noexcept { return u1.all_finite() && u2.all_finite(); }
};

inline double inner(const VectorField2& a, const VectorField2& b) {
  return inner(a.u1, b.u1) + inner(a.u2, b.u2);
}

/// Unnormalized r2c coefficients of a ScalarField.
class Spectrum {
public:
  Spectrum() = default;
  explicit Spectrum(GridPtr grid) : grid_(std::move(grid)), coeffs_(grid_->spectral_size(), Complex{}) {}
  Spectrum(GridPtr grid, Uninitialized) : grid_(std::move(grid)), coeffs_(grid_->spectral_size()) {}

  const TorusGrid& grid() const noexcept { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return coeffs_.size(); }
  Complex* data() noexcept { return coeffs_.data(); }
  const Complex* data() const noexcept { return coeffs_.data(); }
  Complex& operator[](std::size_t k) noexcept { return coeffs_[k]; }
  const Complex& operator[](std::size_t k) const noexcept { return coeffs_[k]; }
  Complex& operator()(std::size_t i, std::size_t j) noexcept { return coeffs_[i * grid_->nh() + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const noexcept {
    return coeffs_[i * grid_->nh() + j];
  }

  Spectrum& operator+=(const Spectrum& o) {
    for (std::size_t k = 0; k < size(); ++k) coeffs_[k] += o.coeffs_[k];
    return *this;
  }
  Spectrum& operator-=(const Spectrum& o) {
    for (std::size_t k = 0; k < size(); ++k) coeffs_[k] -= o.coeffs_[k];
    return *this;
  }
  Spectrum& operator*=(double s) {
    for (auto& c : coeffs_) c *= s;
    return *this;
  }
  /// this += s * o
  Spectrum& axpy(double s, const Spectrum& o) {
    for (std::size_t k = 0; k < size(); ++k) coeffs_[k] += s * o.coeffs_[k];
    return *this;
  }
  /// Multiply coefficient k by symbol[k].
  Spectrum& apply(std::span<const double> symbol) {
    for (std::size_t k = 0; k < size(); ++k) coeffs_[k] *= symbol[k];
    return *this;
  }
  Spectrum& dealias() {
    const auto& mask = grid_->dealias_mask();
    for (std::size_t k = 0; k < size(); ++k)
      if (!mask[k]) coeffs_[k] = 0.0;
    return *this;
  }

private:
  GridPtr grid_;
  AlignedVector<Complex> coeffs_;
};

inline Spectrum to_spectral(const ScalarField& f) {
  Spectrum s(f.grid_ptr(), uninitialized);
  f.grid().fft().forward(f.data(), s.data());
  return s;
}

/// Inverse transform, normalized so to_physical(to_spectral(f)) == f.
inline ScalarField to_physical(Spectrum s) {
  ScalarField f(s.grid_ptr(), uninitialized);
  s.grid().fft().backward(s.data(), f.data());
  f *= 1.0 / static_cast<double>(f.size());
  return f;
}

/// Physical-space inner product sum_x f g dA evaluated from spectra (Parseval
/// with the r2c half-plane weights).
inline double spectral_inner(const Spectrum& a, const Spectrum& b) {
  const TorusGrid& g = a.grid();
  const std::size_t n = g.n();
  const std::size_t h = g.nh();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Complex* ra = a.data() + i * h;
    const Complex* rb = b.data() + i * h;
    double row = ra[0].real() * rb[0].real() + ra[0].imag() * rb[0].imag();
    row += ra[h - 1].real() * rb[h - 1].real() + ra[h - 1].imag() * rb[h - 1].imag();
    for (std::size_t j = 1; j + 1 < h; ++j)
      row += 2.0 * (ra[j].real() * rb[j].real() + ra[j].imag() * rb[j].imag());
    s += row;
  }
  return s * g.cell_area() / static_cast<double>(n * n);
}

} // namespace nmagg
