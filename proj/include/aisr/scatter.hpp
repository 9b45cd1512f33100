#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "aisr/geometry.hpp"
#include "aisr/materials.hpp"

namespace aisr::scatter {

using cplx = std::complex<double>;

inline constexpr int kFarFieldAngles = 87;
inline const std::vector<double> kFrequenciesHz = {1000.0, 1500.0, 2000.0, 2500.0, 3000.0};

// theta_m = 2 pi m / count, m = 0..count-1, measured from +x (the incidence axis).
std::vector<double> standard_angles(int count = kFarFieldAngles);

// chi(r) = c_bg^2 / c(r)^2 - 1 on the pixel grid; zero outside the shape.
struct ContrastGrid {
  int n = 64;
  double pitch = 0.03125;  // m
  double k = 0.0;          // background wavenumber, 1/m
  std::vector<cplx> chi;   // row-major n*n
};

ContrastGrid build_contrast(const geometry::BinaryImage& image, const FluidMaterial& background,
                            const FluidMaterial& object, double frequency_hz);

struct FieldGrid {
  int n = 64;
  double frequency_hz = 0.0;
  std::vector<cplx> pressure;  // total field, row-major
  int iterations = 0;
  double residual = 0.0;
};

struct SolveOptions {
  double tol = 1e-6;
  int max_iter = 2000;
};

// Pixel-integrated 2D Green's weights over the equal-area disk a_e = h/sqrt(pi):
//   off-diagonal  w(r) = (i pi a_e / (2k)) J_1(k a_e) H1_0(k r)
//   self          S    = (i pi a_e / (2k)) H1_1(k a_e) - 1/k^2
cplx offdiag_weight(double k, double pitch, double r);
cplx self_weight(double k, double pitch);

// Lippmann-Schwinger operator p - k^2 G(chi p) with FFT convolution on a
// zero-padded 2n x 2n grid. One instance per worker thread.
class HelmholtzKernel {
 public:
  HelmholtzKernel(int n, double pitch, double k);
  ~HelmholtzKernel();
  HelmholtzKernel(HelmholtzKernel&&) noexcept;

  int grid() const;
  double wavenumber() const;
  // Returns k^2 * conv(G_pixel, src) on the n x n grid.
  std::vector<cplx> convolve(std::span<const cplx> src) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Total-field solve p = p_i + k^2 G(chi p), p_i = exp(i k d.r) with
// d = (cos phi, sin phi); BiCGStab to relative residual <= tol.
FieldGrid solve_total_field(const ContrastGrid& contrast, double incidence_angle,
                            const SolveOptions& opts, const HelmholtzKernel* kernel = nullptr);

struct FarFieldPattern {
  double frequency_hz = 0.0;
  std::vector<double> amplitude;  // non-negative, one per angle
};

// f(theta_m) = (k^2/4) sqrt(2/(pi k)) e^{i pi/4} h^2 sum_j chi_j p_j exp(-i k rhat_m . r_j).
FarFieldPattern far_field(const ContrastGrid& contrast, const FieldGrid& field,
                          std::span<const double> angles);
cplx far_field_complex(const ContrastGrid& contrast, const FieldGrid& field, double theta);

// Flattened frequency-major multifrequency amplitudes: all angles of freqs[0],
// then freqs[1], ... Length = angles * freqs.
struct FarFieldSet {
  std::vector<double> frequencies_hz;
  int angles_per_frequency = kFarFieldAngles;
  std::vector<double> values;
};

FarFieldSet simulate_sample(const geometry::BinaryImage& image, std::span<const double> freqs_hz,
                            const FluidMaterial& background, const FluidMaterial& object,
                            const SolveOptions& opts = {});

// Reuses one kernel per frequency across many images.
class Simulator {
 public:
  Simulator(std::vector<double> freqs_hz, FluidMaterial background, FluidMaterial object,
            int grid, double domain_size, SolveOptions opts = {});
  FarFieldSet simulate(const geometry::BinaryImage& image) const;

 private:
  std::vector<double> freqs_;
  FluidMaterial background_, object_;
  int grid_;
  double domain_size_;
  SolveOptions opts_;
  std::vector<HelmholtzKernel> kernels_;
};

}  // namespace aisr::scatter
