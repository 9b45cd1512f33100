#include "aisr/scatter.hpp"

#include <cmath>
#include <string>

#include "aisr/bessel.hpp"
#include "aisr/errors.hpp"
#include "aisr/fft2d.hpp"

namespace aisr::scatter {

std::vector<double> standard_angles(int count) {
  std::vector<double> angles(static_cast<std::size_t>(count));
  for (int m = 0; m < count; ++m) angles[static_cast<std::size_t>(m)] = 2.0 * M_PI * m / count;
  return angles;
}

ContrastGrid build_contrast(const geometry::BinaryImage& image, const FluidMaterial& background,
                            const FluidMaterial& object, double frequency_hz) {
  if (!background.valid() || !object.valid() || frequency_hz <= 0.0)
    throw ConfigError("build_contrast: invalid materials or frequency");
  ContrastGrid g;
  g.n = image.n;
  g.pitch = image.pitch();
  const double c_bg = background.sound_speed();
  const double c_obj = object.sound_speed();
  g.k = 2.0 * M_PI * frequency_hz / c_bg;
  const double chi = (c_bg / c_obj) * (c_bg / c_obj) - 1.0;
  g.chi.assign(image.pixels.size(), cplx{0.0, 0.0});
  for (std::size_t i = 0; i < image.pixels.size(); ++i)
    if (image.pixels[i]) g.chi[i] = chi;
  return g;
}

cplx offdiag_weight(double k, double pitch, double r) {
  const double ae = pitch / std::sqrt(M_PI);
  return cplx{0.0, M_PI * ae / (2.0 * k)} * mie::bessel_j(1, k * ae) * mie::hankel1(0, k * r);
}

cplx self_weight(double k, double pitch) {
  const double ae = pitch / std::sqrt(M_PI);
  return cplx{0.0, M_PI * ae / (2.0 * k)} * mie::hankel1(1, k * ae) - 1.0 / (k * k);
}

struct HelmholtzKernel::Impl {
  int n;
  int pad;  // 2n
  double pitch;
  double k;
  Fft2D fft;
  std::vector<cplx> kernel_hat;          // FFT of the pixel-integrated Green kernel
  mutable std::vector<cplx> work;        // pad*pad scratch

  Impl(int n_, double pitch_, double k_)
      : n(n_), pad(2 * n_), pitch(pitch_), k(k_), fft(pad) {
    kernel_hat.assign(static_cast<std::size_t>(pad) * pad, cplx{0.0, 0.0});
    for (int dy = -(n - 1); dy <= n - 1; ++dy) {
      for (int dx = -(n - 1); dx <= n - 1; ++dx) {
        const int iy = (dy + pad) % pad;
        const int ix = (dx + pad) % pad;
        cplx w;
        if (dx == 0 && dy == 0) {
          w = self_weight(k, pitch);
        } else {
          const double r = pitch * std::hypot(static_cast<double>(dx), static_cast<double>(dy));
          w = offdiag_weight(k, pitch, r);
        }
        kernel_hat[static_cast<std::size_t>(iy) * pad + ix] = w;
      }
    }
    fft.forward(kernel_hat);
    work.assign(static_cast<std::size_t>(pad) * pad, cplx{0.0, 0.0});
  }
};

HelmholtzKernel::HelmholtzKernel(int n, double pitch, double k)
    : impl_(std::make_unique<Impl>(n, pitch, k)) {
  if (n <= 0 || pitch <= 0.0 || k <= 0.0) throw ConfigError("HelmholtzKernel: invalid parameters");
}

HelmholtzKernel::~HelmholtzKernel() = default;
HelmholtzKernel::HelmholtzKernel(HelmholtzKernel&&) noexcept = default;

int HelmholtzKernel::grid() const { return impl_->n; }
double HelmholtzKernel::wavenumber() const { return impl_->k; }

std::vector<cplx> HelmholtzKernel::convolve(std::span<const cplx> src) const {
  const int n = impl_->n;
  const int pad = impl_->pad;
  if (src.size() != static_cast<std::size_t>(n) * n)
    throw ShapeError("HelmholtzKernel::convolve: grid size mismatch");
  auto& w = impl_->work;
  std::fill(w.begin(), w.end(), cplx{0.0, 0.0});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      w[static_cast<std::size_t>(i) * pad + j] = src[static_cast<std::size_t>(i) * n + j];
  impl_->fft.forward(w);
  for (std::size_t i = 0; i < w.size(); ++i) w[i] *= impl_->kernel_hat[i];
  impl_->fft.inverse(w);
  const double k2 = impl_->k * impl_->k;
  std::vector<cplx> out(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i) * n + j] = k2 * w[static_cast<std::size_t>(i) * pad + j];
  return out;
}

namespace {

std::vector<cplx> incident_field(const ContrastGrid& g, double phi) {
  const double half = 0.5 * g.pitch * g.n;
  const double dx = std::cos(phi), dy = std::sin(phi);
  std::vector<cplx> p(static_cast<std::size_t>(g.n) * g.n);
  for (int i = 0; i < g.n; ++i) {
    const double y = (i + 0.5) * g.pitch - half;
    for (int j = 0; j < g.n; ++j) {
      const double x = (j + 0.5) * g.pitch - half;
      const double ph = g.k * (x * dx + y * dy);
      p[static_cast<std::size_t>(i) * g.n + j] = cplx{std::cos(ph), std::sin(ph)};
    }
  }
  return p;
}

double norm2(std::span<const cplx> v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

// A p = p - k^2 G(chi . p)
std::vector<cplx> apply_operator(const ContrastGrid& g, const HelmholtzKernel& kern,
                                 std::span<const cplx> p) {
  std::vector<cplx> src(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) src[i] = g.chi[i] * p[i];
  std::vector<cplx> conv = kern.convolve(src);
  for (std::size_t i = 0; i < p.size(); ++i) conv[i] = p[i] - conv[i];
  return conv;
}

}  // namespace

FieldGrid solve_total_field(const ContrastGrid& contrast, double incidence_angle,
                            const SolveOptions& opts, const HelmholtzKernel* kernel) {
  if (opts.tol <= 0.0) throw ConfigError("solve_total_field: tol must be positive");
  std::unique_ptr<HelmholtzKernel> own;
  if (!kernel) {
    own = std::make_unique<HelmholtzKernel>(contrast.n, contrast.pitch, contrast.k);
    kernel = own.get();
  }

  FieldGrid out;
  out.n = contrast.n;

  const std::vector<cplx> b = incident_field(contrast, incidence_angle);
  const double bnorm = norm2(b);

  std::vector<cplx> x = b;
  std::vector<cplx> r = apply_operator(contrast, *kernel, x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  double rnorm = norm2(r);
  if (rnorm / bnorm <= opts.tol) {
    out.pressure = std::move(x);
    out.iterations = 0;
    out.residual = rnorm / bnorm;
    return out;
  }

  // BiCGStab, unpreconditioned.
  std::vector<cplx> rhat = r;
  std::vector<cplx> p(r.size(), cplx{0, 0}), v(r.size(), cplx{0, 0});
  std::vector<cplx> s(r.size()), t;
  cplx rho{1.0, 0.0}, alpha{1.0, 0.0}, omega{1.0, 0.0};
  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    const cplx rho1 = dot(rhat, r);
    if (std::abs(rho1) < 1e-300) break;  // breakdown; fall through to residual check
    const cplx beta = (rho1 / rho) * (alpha / omega);
    rho = rho1;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    v = apply_operator(contrast, *kernel, p);
    alpha = rho / dot(rhat, v);
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = r[i] - alpha * v[i];
    if (norm2(s) / bnorm <= opts.tol) {
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
      r = s;
      rnorm = norm2(r);
      ++iter;
      break;
    }
    t = apply_operator(contrast, *kernel, s);
    omega = dot(t, s) / dot(t, t);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i] + omega * s[i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = s[i] - omega * t[i];
    rnorm = norm2(r);
    if (rnorm / bnorm <= opts.tol) {
      ++iter;
      break;
    }
  }

  // True residual, not the recurrence estimate.
  std::vector<cplx> ax = apply_operator(contrast, *kernel, x);
  double true_res = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) true_res += std::norm(b[i] - ax[i]);
  true_res = std::sqrt(true_res) / bnorm;
  if (true_res > opts.tol)
    throw SolverError("solve_total_field: no convergence after " + std::to_string(iter) +
                          " iterations (residual " + std::to_string(true_res) + ")",
                      true_res);

  out.pressure = std::move(x);
  out.iterations = iter;
  out.residual = true_res;
  return out;
}

cplx far_field_complex(const ContrastGrid& contrast, const FieldGrid& field, double theta) {
  const double k = contrast.k;
  const int n = contrast.n;
  const double h = contrast.pitch;
  const double half = 0.5 * h * n;
  const cplx front = (k * k / 4.0) * std::sqrt(2.0 / (M_PI * k)) *
                     std::exp(cplx{0.0, M_PI / 4.0}) * h * h;
  const double cx = std::cos(theta), sy = std::sin(theta);
  cplx sum{0.0, 0.0};
  for (int i = 0; i < n; ++i) {
    const double y = (i + 0.5) * h - half;
    for (int j = 0; j < n; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * n + j;
      if (contrast.chi[idx] == cplx{0.0, 0.0}) continue;
      const double x = (j + 0.5) * h - half;
      const double ph = -k * (cx * x + sy * y);
      sum += contrast.chi[idx] * field.pressure[idx] * cplx{std::cos(ph), std::sin(ph)};
    }
  }
  return front * sum;
}

FarFieldPattern far_field(const ContrastGrid& contrast, const FieldGrid& field,
                          std::span<const double> angles) {
  if (field.pressure.size() != contrast.chi.size())
    throw ShapeError("far_field: field and contrast grids differ");
  FarFieldPattern out;
  out.frequency_hz = field.frequency_hz;
  out.amplitude.reserve(angles.size());
  for (const double th : angles)
    out.amplitude.push_back(std::abs(far_field_complex(contrast, field, th)));
  return out;
}

FarFieldSet simulate_sample(const geometry::BinaryImage& image, std::span<const double> freqs_hz,
                            const FluidMaterial& background, const FluidMaterial& object,
                            const SolveOptions& opts) {
  Simulator sim(std::vector<double>(freqs_hz.begin(), freqs_hz.end()), background, object,
                image.n, image.domain_size, opts);
  return sim.simulate(image);
}

Simulator::Simulator(std::vector<double> freqs_hz, FluidMaterial background, FluidMaterial object,
                     int grid, double domain_size, SolveOptions opts)
    : freqs_(std::move(freqs_hz)),
      background_(background),
      object_(object),
      grid_(grid),
      domain_size_(domain_size),
      opts_(opts) {
  const double c_bg = background_.sound_speed();
  kernels_.reserve(freqs_.size());
  for (const double f : freqs_)
    kernels_.emplace_back(grid_, domain_size_ / grid_, 2.0 * M_PI * f / c_bg);
}

FarFieldSet Simulator::simulate(const geometry::BinaryImage& image) const {
  if (image.n != grid_ || image.domain_size != domain_size_)
    throw ShapeError("Simulator: image grid does not match");
  FarFieldSet set;
  set.frequencies_hz = freqs_;
  const std::vector<double> angles = standard_angles();
  set.angles_per_frequency = static_cast<int>(angles.size());
  set.values.reserve(freqs_.size() * angles.size());
  for (std::size_t fi = 0; fi < freqs_.size(); ++fi) {
    const double f = freqs_[fi];
    const ContrastGrid contrast = build_contrast(image, background_, object_, f);
    FieldGrid field;
    try {
      field = solve_total_field(contrast, 0.0, opts_, &kernels_[fi]);
    } catch (const SolverError& e) {
      throw SolverError("frequency index " + std::to_string(fi) + ": " + e.what(), e.residual());
    }
    field.frequency_hz = f;
    const FarFieldPattern pattern = far_field(contrast, field, angles);
    set.values.insert(set.values.end(), pattern.amplitude.begin(), pattern.amplitude.end());
  }
  return set;
}

}  // namespace aisr::scatter
