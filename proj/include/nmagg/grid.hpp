#pragma once

#include "errors.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <new>
#include <numbers>
#include <type_traits>
#include <utility>
#include <vector>

namespace nmagg {

using Complex = std::complex<double>;

namespace detail {

// Field-sized blocks are recycled per thread: fresh large allocations would
// otherwise page-fault on every transform.
class BlockPool {
public:
  static constexpr std::size_t min_bytes = 1 << 14;
  static constexpr std::size_t max_cached = 64;

  /// Null once the calling thread's pool has been destroyed.
  static BlockPool* local() {
    thread_local BlockPool pool;
    return alive() ? &pool : nullptr;
  }

  void* take(std::size_t bytes, std::size_t align) {
    for (auto& bucket : buckets_) {
      if (bucket.bytes == bytes && bucket.align == align && !bucket.blocks.empty()) {
        void* p = bucket.blocks.back();
        bucket.blocks.pop_back();
        return p;
      }
    }
    return ::operator new(bytes, std::align_val_t{align});
  }

  void give(void* p, std::size_t bytes, std::size_t align) noexcept {
    for (auto& bucket : buckets_) {
      if (bucket.bytes == bytes && bucket.align == align) {
        if (bucket.blocks.size() < max_cached) {
          try {
            bucket.blocks.push_back(p);
            return;
          } catch (...) {
          }
        }
        ::operator delete(p, std::align_val_t{align});
        return;
      }
    }
    try {
      buckets_.push_back({bytes, align, {p}});
    } catch (...) {
      ::operator delete(p, std::align_val_t{align});
    }
  }

  ~BlockPool() {
    alive() = false;
    for (auto& bucket : buckets_)
      for (void* p : bucket.blocks) ::operator delete(p, std::align_val_t{bucket.align});
  }

private:
  static bool& alive() {
    thread_local bool flag = true;
    return flag;
  }

  struct Bucket {
    std::size_t bytes;
    std::size_t align;
    std::vector<void*> blocks;
  };
  std::vector<Bucket> buckets_;
};

} // namespace detail

template <class T, std::size_t Align = 64>
struct AlignedAllocator {
  using value_type = T;

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Align>&) noexcept {}

  template <class U>
  struct rebind { using other = AlignedAllocator<U, Align>; };

  T* allocate(std::size_t count) {
    const std::size_t bytes = count * sizeof(T);
    if (bytes >= detail::BlockPool::min_bytes)
      if (auto* pool = detail::BlockPool::local()) return static_cast<T*>(pool->take(bytes, Align));
    return static_cast<T*>(::operator new(bytes, std::align_val_t{Align}));
  }
  void deallocate(T* p, std::size_t count) noexcept {
    const std::size_t bytes = count * sizeof(T);
    if (bytes >= detail::BlockPool::min_bytes)
      if (auto* pool = detail::BlockPool::local()) return pool->give(p, bytes, Align);
    ::operator delete(p, std::align_val_t{Align});
  }

  // Sized construction without a fill value leaves trivial elements
  // uninitialized; field storage asks for that only when it overwrites
  // every entry.
  template <class U>
  void construct(U*) noexcept {
    static_assert(std::is_trivially_copyable_v<U> && std::is_trivially_destructible_v<U>);
  }
  template <class U, class... Args>
  void construct(U* p, Args&&... args) {
    ::new (static_cast<void*>(p)) U(std::forward<Args>(args)...);
  }

  friend bool operator==(const AlignedAllocator&, const AlignedAllocator&) { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

namespace detail {

// FFTW's planner is not reentrant; execution through the new-array
// interface is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftPlans {
public:
  explicit FftPlans(std::size_t n) {
    AlignedVector<double> real(n * n);
    AlignedVector<Complex> spec(n * (n / 2 + 1));
    auto* cplx = reinterpret_cast<fftw_complex*>(spec.data());
    const int nn = static_cast<int>(n);
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_2d(nn, nn, real.data(), cplx, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(nn, nn, cplx, real.data(), FFTW_ESTIMATE);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(const double* in, Complex* out) const {
    // r2c leaves its input intact for out-of-place transforms.
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  }
  /// Destroys `in`.
  void backward(Complex* in, double* out) const {
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in), out);
  }

private:
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// One plan pair per size for the whole process, so that every grid of a
/// given size transforms bit-identically.
inline std::shared_ptr<const FftPlans> shared_plans(std::size_t n) {
  // Never destroyed: plans stay valid for objects that outlive main.
  static auto* cache = new std::vector<std::pair<std::size_t, std::shared_ptr<const FftPlans>>>();
  static std::mutex m;
  std::lock_guard lock(m);
  for (const auto& [size, plans] : *cache)
    if (size == n) return plans;
  cache->emplace_back(n, std::make_shared<const FftPlans>(n));
  return cache->back().second;
}

} // namespace detail

/// Uniform n x n periodic grid on [0, L)^2 with the wavenumber tables used
/// by every spectral operator. Index (i, j) addresses x_i = i L/n, y_j = j L/n;
/// storage is row-major with j contiguous. Spectra use the r2c half layout
/// n x (n/2 + 1).
class TorusGrid {
public:
  static std::shared_ptr<const TorusGrid> create(std::size_t n, double period_length) {
    return std::shared_ptr<const TorusGrid>(new TorusGrid(n, period_length));
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t nh() const noexcept { return n_ / 2 + 1; }
  std::size_t size() const noexcept { return n_ * n_; }
  std::size_t spectral_size() const noexcept { return n_ * nh(); }
  double period_length() const noexcept { return length_; }
  double spacing() const noexcept { return length_ / static_cast<double>(n_); }
  double cell_area() const noexcept { return spacing() * spacing(); }
  double area() const noexcept { return length_ * length_; }

  /// Signed mode number m in {-n/2, ..., n/2 - 1} for FFT index i.
  long mode(std::size_t i) const noexcept {
    const long ii = static_cast<long>(i);
    const long nn = static_cast<long>(n_);
    return ii < nn / 2 ? ii : ii - nn;
  }
  /// k_j = 2 pi m_j / L, full table (Nyquist kept).
  double wavenumber(std::size_t i) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(mode(i)) / length_;
  }

  /// Wavenumbers for odd-order derivatives: Nyquist zeroed.
  const std::vector<double>& kx() const noexcept { return kx_; }
  const std::vector<double>& ky() const noexcept { return ky_; }
  /// Symbol of -Laplacian in the r2c layout, equal to kx^2 + ky^2 built from
  /// the Nyquist-zeroed tables, so that div(grad f) == laplacian(f).
  const std::vector<double>& neg_laplacian_symbol() const noexcept { return ksq_; }
  /// 2/3-rule mask in the r2c layout.
  const std::vector<unsigned char>& dealias_mask() const noexcept { return mask_; }

  const detail::FftPlans& fft() const noexcept { return *plans_; }

  bool same_as(const TorusGrid& other) const noexcept {
    return this == &other || (n_ == other.n_ && length_ == other.length_);
  }

private:
  TorusGrid(std::size_t n, double period_length) : n_(n), length_(period_length) {
    if (n < 8 || n % 2 != 0)
      throw ParameterError("grid: n must be an even integer >= 8, got " + std::to_string(n));
    if (!(period_length > 0.0) || !std::isfinite(period_length))
      throw ParameterError("grid: period length must be positive and finite");

    const std::size_t h = nh();
    kx_.resize(n_);
    ky_.resize(h);
    for (std::size_t i = 0; i < n_; ++i)
      kx_[i] = (i == n_ / 2) ? 0.0 : wavenumber(i);
    for (std::size_t j = 0; j < h; ++j)
      ky_[j] = (j == n_ / 2) ? 0.0 : wavenumber(j);

    const long cut = static_cast<long>(n_ / 3);
    ksq_.resize(n_ * h);
    mask_.resize(n_ * h);
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < h; ++j) {
        ksq_[i * h + j] = kx_[i] * kx_[i] + ky_[j] * ky_[j];
        const bool keep = std::labs(mode(i)) <= cut && static_cast<long>(j) <= cut;
        mask_[i * h + j] = keep ? 1 : 0;
      }
    }
    plans_ = detail::shared_plans(n_);
  }

  std::size_t n_;
  double length_;
  std::vector<double> kx_;
  std::vector<double> ky_;
  std::vector<double> ksq_;
  std::vector<unsigned char> mask_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

using GridPtr = std::shared_ptr<const TorusGrid>;

} // namespace nmagg
