#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>

#include "phaseless/types.hpp"

namespace phaseless {

/// Smallest m >= n whose prime factors are all in {2, 3, 5, 7}.
inline int next_fast_size(int n) {
  if (n < 1) return 1;
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

namespace detail {
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// In-place complex-to-complex 3D transform on an owned FFTW buffer.
/// forward() is unnormalized; backward() divides by the total size.
/// Not thread-safe per instance; distinct instances may run concurrently.
class Fft3 {
 public:
  // Dimensions ordered slowest..fastest (n3 slowest, n1 fastest), matching
  // the row-major x1-fastest array layout used throughout.
  Fft3(int n3, int n2, int n1) : n3_(n3), n2_(n2), n1_(n1) {
    total_ = std::size_t(n3) * n2 * n1;
    buf_ = fftw_alloc_complex(total_);
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_3d(n3, n2, n1, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_3d(n3, n2, n1, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft3() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft3(const Fft3&) = delete;
  Fft3& operator=(const Fft3&) = delete;

  complex* data() { return reinterpret_cast<complex*>(buf_); }
  const complex* data() const { return reinterpret_cast<const complex*>(buf_); }
  std::size_t size() const { return total_; }

  void forward() { fftw_execute(fwd_); }
  void backward() {
    fftw_execute(bwd_);
    const real s = 1.0 / real(total_);
    complex* d = data();
    for (std::size_t i = 0; i < total_; ++i) d[i] *= s;
  }

 private:
  int n3_, n2_, n1_;
  std::size_t total_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

/// In-place 2D counterpart of Fft3.
class Fft2 {
 public:
  Fft2(int n2, int n1) : n2_(n2), n1_(n1) {
    total_ = std::size_t(n2) * n1;
    buf_ = fftw_alloc_complex(total_);
    if (!buf_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fwd_ = fftw_plan_dft_2d(n2, n1, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(n2, n1, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  complex* data() { return reinterpret_cast<complex*>(buf_); }
  std::size_t size() const { return total_; }

  void forward() { fftw_execute(fwd_); }
  void backward() {
    fftw_execute(bwd_);
    const real s = 1.0 / real(total_);
    complex* d = data();
    for (std::size_t i = 0; i < total_; ++i) d[i] *= s;
  }

 private:
  int n2_, n1_;
  std::size_t total_;
  fftw_complex* buf_;
  fftw_plan fwd_, bwd_;
};

}  // namespace phaseless
