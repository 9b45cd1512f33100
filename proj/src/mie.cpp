#include "aisr/mie.hpp"

#include <cmath>
#include <string>

#include "aisr/bessel.hpp"
#include "aisr/errors.hpp"

namespace aisr::mie {

namespace {

cplx det3(const std::array<std::array<cplx, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

const ElasticMaterial& elastic_interior(const MieProblem& p) {
  const auto* em = std::get_if<ElasticMaterial>(&p.interior);
  if (!em) throw NumericError("mie: problem interior is not elastic");
  return *em;
}

}  // namespace

cplx ipow(int n) {
  static const cplx table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[((n % 4) + 4) % 4];
}

double MieProblem::x1() const { return omega() * radius / elastic_interior(*this).cp; }

double MieProblem::x2() const {
  const auto& em = elastic_interior(*this);
  if (em.cs <= 0.0) throw NumericError("mie: zero shear speed, use the fluid solver");
  return omega() * radius / em.cs;
}

int default_n_max(double x3) { return static_cast<int>(std::ceil(x3)) + 12; }

ElasticSystem assemble_elastic_system(const MieProblem& problem, int n) {
  const auto& em = elastic_interior(problem);
  if (em.cs <= 0.0)
    throw NumericError("assemble_elastic_system: zero shear speed, use the fluid solver");
  if (!em.valid() || !problem.exterior.valid() || problem.radius <= 0.0 ||
      problem.frequency <= 0.0)
    throw ConfigError("assemble_elastic_system: invalid problem");

  const double x1 = problem.x1();
  const double x2 = problem.x2();
  const double x3 = problem.x3();
  const double a = problem.radius;
  const double rho3_w2 = problem.exterior.density * problem.omega() * problem.omega();
  const double mu = em.mu();
  const double lambda = em.lambda();
  const double nn = static_cast<double>(n);

  const double j1 = bessel_j(n, x1), j1p = bessel_j_prime(n, x1), j1pp = bessel_j_second(n, x1);
  const double j2 = bessel_j(n, x2), j2p = bessel_j_prime(n, x2), j2pp = bessel_j_second(n, x2);
  const double j3 = bessel_j(n, x3), j3p = bessel_j_prime(n, x3);
  const cplx h3 = hankel1(n, x3), h3p = hankel1_prime(n, x3);

  ElasticSystem sys;
  // Normal displacement continuity.
  sys.m[0][0] = -x1 * j1p;
  sys.m[0][1] = nn * j2;
  sys.m[0][2] = -(x3 / rho3_w2) * h3p;
  // Pressure equals minus the normal stress.
  sys.m[1][0] = x1 * x1 * (-2.0 * mu * j1pp + lambda * j1);
  sys.m[1][1] = 2.0 * mu * nn * (x2 * j2p - j2);
  sys.m[1][2] = a * a * h3;
  // Tangential shear stress vanishes.
  sys.m[2][0] = 2.0 * nn * (x1 * j1p - j1);
  sys.m[2][1] = -nn * nn * j2 + x2 * j2p - x2 * x2 * j2pp;
  sys.m[2][2] = 0.0;

  const cplx modal = eps_n(n) * ipow(n);  // incident-wave modal amplitude
  sys.rhs[0] = (x3 / rho3_w2) * j3p * modal;
  sys.rhs[1] = -a * a * j3 * modal;
  sys.rhs[2] = 0.0;
  return sys;
}

MieCoefficients solve_coefficients_cramer(const MieProblem& problem, int n_max) {
  MieCoefficients out;
  out.n_max = n_max;
  out.a.resize(static_cast<std::size_t>(n_max) + 1);
  out.b.resize(static_cast<std::size_t>(n_max) + 1);
  out.c.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    const ElasticSystem sys = assemble_elastic_system(problem, n);
    const cplx det_m = det3(sys.m);
    if (std::abs(det_m) < 1e-300)
      throw NumericError("solve_coefficients_cramer: singular system at order " +
                         std::to_string(n));
    auto replaced = [&](int col) {
      auto v = sys.m;
      for (int r = 0; r < 3; ++r) v[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] = sys.rhs[static_cast<std::size_t>(r)];
      return det3(v) / det_m;
    };
    out.a[static_cast<std::size_t>(n)] = replaced(0);
    out.b[static_cast<std::size_t>(n)] = replaced(1);
    out.c[static_cast<std::size_t>(n)] = replaced(2);
  }
  return out;
}

MieCoefficients fluid_cylinder_coefficients(double radius, double frequency,
                                            const FluidMaterial& exterior,
                                            const FluidMaterial& interior, int n_max) {
  if (!exterior.valid() || !interior.valid() || radius <= 0.0 || frequency <= 0.0)
    throw ConfigError("fluid_cylinder_coefficients: invalid problem");
  const double w = 2.0 * M_PI * frequency;
  const double k0 = w / exterior.sound_speed();
  const double k1 = w / interior.sound_speed();
  const double x0 = k0 * radius;
  const double x1 = k1 * radius;
  const double s0 = k0 / exterior.density;
  const double s1 = k1 / interior.density;

  MieCoefficients out;
  out.n_max = n_max;
  out.a.assign(static_cast<std::size_t>(n_max) + 1, cplx{0.0, 0.0});
  out.b.assign(static_cast<std::size_t>(n_max) + 1, cplx{0.0, 0.0});
  out.c.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double j0 = bessel_j(n, x0), j0p = bessel_j_prime(n, x0);
    const double ji = bessel_j(n, x1), jip = bessel_j_prime(n, x1);
    const cplx h = hankel1(n, x0), hp = hankel1_prime(n, x0);
    const cplx num = s0 * j0p * ji - s1 * j0 * jip;
    const cplx den = s0 * hp * ji - s1 * h * jip;
    if (std::abs(den) < 1e-300)
      throw NumericError("fluid_cylinder_coefficients: singular denominator at order " +
                         std::to_string(n));
    out.c[static_cast<std::size_t>(n)] = -eps_n(n) * ipow(n) * num / den;
  }
  return out;
}

cplx far_field_complex(const MieCoefficients& coeffs, double k, double theta) {
  if (k <= 0.0) throw ConfigError("far_field: k must be positive");
  const cplx phase = std::sqrt(2.0 / (M_PI * k)) * std::exp(cplx{0.0, -M_PI / 4.0});
  cplx sum{0.0, 0.0};
  for (int n = 0; n <= coeffs.n_max; ++n)
    sum += coeffs.c[static_cast<std::size_t>(n)] * ipow(-n) * std::cos(n * theta);
  return phase * sum;
}

std::vector<double> far_field_from_coefficients(const MieCoefficients& coeffs, double k,
                                                std::span<const double> angles) {
  std::vector<double> amps;
  amps.reserve(angles.size());
  for (const double th : angles) amps.push_back(std::abs(far_field_complex(coeffs, k, th)));
  return amps;
}

double scattering_cross_section(const MieCoefficients& coeffs, double k) {
  if (k <= 0.0) throw ConfigError("scattering_cross_section: k must be positive");
  double sum = 0.0;
  for (int n = 0; n <= coeffs.n_max; ++n) {
    const double w = n == 0 ? 2.0 : 1.0;
    sum += w * std::norm(coeffs.c[static_cast<std::size_t>(n)]);
  }
  return 2.0 / k * sum;
}

}  // namespace aisr::mie
