#pragma once

#include <complex>
#include <vector>

struct fftw_plan_s;

namespace aisr {

// In-order complex 2D FFT of fixed size n x n (row-major), FFTW backed.
// Plans are created with FFTW_ESTIMATE so results are run-to-run identical.
// Not safe for concurrent use of one instance; make one per worker.
class Fft2D {
 public:
  explicit Fft2D(int n);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  int size() const { return n_; }
  void forward(std::vector<std::complex<double>>& data) const;
  // Inverse scaled by 1/(n*n), so inverse(forward(x)) == x.
  void inverse(std::vector<std::complex<double>>& data) const;

 private:
  void run(fftw_plan_s* plan, std::vector<std::complex<double>>& data, double scale) const;

  int n_;
  std::complex<double>* buf_;
  fftw_plan_s* fwd_;
  fftw_plan_s* inv_;
};

}  // namespace aisr
