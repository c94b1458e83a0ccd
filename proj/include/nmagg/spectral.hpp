#pragma once

#include "field.hpp"

namespace nmagg {

// Spectral-space building blocks. Odd derivatives use the Nyquist-zeroed
// wavenumber tables of the grid.

// i k c without the general complex product
inline Complex times_ik(double k, const Complex& c) noexcept { return {-k * c.imag(), k * c.real()}; }

inline Spectrum ddx(const Spectrum& s) {
  Spectrum out(s.grid_ptr(), uninitialized);
  const TorusGrid& g = s.grid();
  const auto& kx = g.kx();
  const std::size_t h = g.nh();
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < h; ++j)
      out[i * h + j] = times_ik(kx[i], s[i * h + j]);
  return out;
}

inline Spectrum ddy(const Spectrum& s) {
  Spectrum out(s.grid_ptr(), uninitialized);
  const TorusGrid& g = s.grid();
  const auto& ky = g.ky();
  const std::size_t h = g.nh();
  for (std::size_t i = 0; i < g.n(); ++i)
    for (std::size_t j = 0; j < h; ++j)
      out[i * h + j] = times_ik(ky[j], s[i * h + j]);
  return out;
}

inline Spectrum laplacian(Spectrum s) {
  const auto& ksq = s.grid().neg_laplacian_symbol();
  for (std::size_t k = 0; k < s.size(); ++k) s[k] *= -ksq[k];
  return s;
}

/// True for the modes annihilated by the discrete Laplacian: the mean and the
/// three pure-Nyquist combinations.
inline bool laplacian_kernel_mode(const TorusGrid& g, std::size_t k) {
  return g.neg_laplacian_symbol()[k] == 0.0;
}

// Physical-space operators.

inline VectorField2 grad(const ScalarField& f) {
  const Spectrum s = to_spectral(f);
  return {to_physical(ddx(s)), to_physical(ddy(s))};
}

inline ScalarField divergence(const VectorField2& v) {
  Spectrum s = ddx(to_spectral(v.u1));
  s += ddy(to_spectral(v.u2));
  return to_physical(std::move(s));
}

inline ScalarField laplacian(const ScalarField& f) {
  return to_physical(laplacian(to_spectral(f)));
}

/// v -> v - k (k . v) / |k|^2 in Fourier space; modes with |k| = 0 (including
/// the mean flow) pass through.
inline VectorField2 leray_project(const VectorField2& v) {
  Spectrum a = to_spectral(v.u1);
  Spectrum b = to_spectral(v.u2);
  const TorusGrid& g = v.grid();
  const auto& kx = g.kx();
  const auto& ky = g.ky();
  const auto& ksq = g.neg_laplacian_symbol();
  const std::size_t h = g.nh();
  for (std::size_t i = 0; i < g.n(); ++i) {
    for (std::size_t j = 0; j < h; ++j) {
      const std::size_t k = i * h + j;
      if (ksq[k] == 0.0) continue;
      const Complex kv = (kx[i] * a[k] + ky[j] * b[k]) / ksq[k];
      a[k] -= kx[i] * kv;
      b[k] -= ky[j] * kv;
    }
  }
  return {to_physical(std::move(a)), to_physical(std::move(b))};
}

/// curl_2 v = d1 v2 - d2 v1
inline ScalarField curl2(const VectorField2& v) {
  Spectrum s = ddx(to_spectral(v.u2));
  s -= ddy(to_spectral(v.u1));
  return to_physical(std::move(s));
}

/// curl_1 w = (d2 w, -d1 w)
inline VectorField2 curl1(const ScalarField& w) {
  const Spectrum s = to_spectral(w);
  Spectrum minus_dx = ddx(s);
  minus_dx *= -1.0;
  return {to_physical(ddy(s)), to_physical(std::move(minus_dx))};
}

/// (grad v)_ij = d_i v_j
struct VelocityGradient {
  ScalarField d1v1, d1v2, d2v1, d2v2;
};

inline VelocityGradient velocity_gradient(const VectorField2& v) {
  const Spectrum a = to_spectral(v.u1);
  const Spectrum b = to_spectral(v.u2);
  return {to_physical(ddx(a)), to_physical(ddx(b)), to_physical(ddy(a)), to_physical(ddy(b))};
}

/// D = (grad v + grad v^T)/2 stored as (d11, d12, d22); W = (grad v - grad v^T)/2
/// is skew with the single entry W_12 = (d1 v2 - d2 v1)/2.
struct StrainTensors {
  ScalarField d11, d12, d22;
  ScalarField w12;

  ScalarField trace_d() const { return d11 + d22; }
};

inline StrainTensors strain_tensors(const VectorField2& v) {
  VelocityGradient g = velocity_gradient(v);
  StrainTensors t;
  t.d11 = g.d1v1;
  t.d22 = g.d2v2;
  t.d12 = (g.d1v2 + g.d2v1) * 0.5;
  t.w12 = (g.d1v2 - g.d2v1) * 0.5;
  return t;
}

} // namespace nmagg
