#include "aisr/fft2d.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

#include "aisr/errors.hpp"

namespace aisr {

namespace {
// FFTW plan creation/destruction is not thread-safe.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Fft2D::Fft2D(int n) : n_(n) {
  if (n <= 0) throw ConfigError("Fft2D: size must be positive");
  std::lock_guard<std::mutex> lock(plan_mutex());
  buf_ = reinterpret_cast<std::complex<double>*>(fftw_malloc(sizeof(fftw_complex) *
                                                             static_cast<std::size_t>(n) * n));
  auto* raw = reinterpret_cast<fftw_complex*>(buf_);
  fwd_ = fftw_plan_dft_2d(n, n, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_2d(n, n, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE);
}

Fft2D::~Fft2D() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  fftw_destroy_plan(fwd_);
  fftw_destroy_plan(inv_);
  fftw_free(buf_);
}

void Fft2D::run(fftw_plan_s* plan, std::vector<std::complex<double>>& data, double scale) const {
  const auto count = static_cast<std::size_t>(n_) * n_;
  if (data.size() != count) throw ShapeError("Fft2D: data size mismatch");
  std::memcpy(buf_, data.data(), count * sizeof(std::complex<double>));
  fftw_execute(plan);
  if (scale == 1.0) {
    std::memcpy(data.data(), buf_, count * sizeof(std::complex<double>));
  } else {
    for (std::size_t i = 0; i < count; ++i) data[i] = buf_[i] * scale;
  }
}

void Fft2D::forward(std::vector<std::complex<double>>& data) const { run(fwd_, data, 1.0); }

void Fft2D::inverse(std::vector<std::complex<double>>& data) const {
  run(inv_, data, 1.0 / (static_cast<double>(n_) * n_));
}

}  // namespace aisr
