#pragma once

// Thin RAII layer over FFTW's 2D real transforms. Plans are created once per
// grid size with FFTW_ESTIMATE (deterministic plan selection) and executed
// through the new-array interface, so one plan serves every buffer.

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace eulerrough::fft {

using Complex = std::complex<double>;

class RealPlan2D {
 public:
  explicit RealPlan2D(int n) : n_(n) {
    std::vector<double> real(static_cast<std::size_t>(n) * n);
    std::vector<Complex> spec(static_cast<std::size_t>(n) * (n / 2 + 1));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_r2c_2d(n, n, real.data(), as_fftw(spec.data()), flags);
    backward_ = fftw_plan_dft_c2r_2d(n, n, as_fftw(spec.data()), real.data(), flags);
  }
  ~RealPlan2D() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  RealPlan2D(const RealPlan2D&) = delete;
  RealPlan2D& operator=(const RealPlan2D&) = delete;

  int n() const { return n_; }

  /// Unnormalized forward transform (FFTW sign convention e^{-i}).
  void forward(std::span<const double> in, std::span<Complex> out) const {
    // FFTW's r2c does not modify its input.
    fftw_execute_dft_r2c(forward_, const_cast<double*>(in.data()), as_fftw(out.data()));
  }

  /// Unnormalized inverse transform. `in` is consumed as scratch.
  void backward(std::span<Complex> in, std::span<double> out) const {
    fftw_execute_dft_c2r(backward_, as_fftw(in.data()), out.data());
  }

 private:
  static fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

  int n_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

/// Process-wide plan cache; planning is serialized, execution is reentrant.
inline const RealPlan2D& plan_for(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<RealPlan2D>> plans;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = plans.find(n);
  if (it == plans.end()) {
    it = plans.emplace(n, std::make_unique<RealPlan2D>(n)).first;
  }
  return *it->second;
}

}  // namespace eulerrough::fft
