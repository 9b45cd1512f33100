#pragma once

#include <array>
#include <complex>
#include <span>
#include <variant>
#include <vector>

#include "aisr/materials.hpp"

namespace aisr::mie {

using cplx = std::complex<double>;

// Plane-wave scattering by an infinite cylinder, time convention exp(-i w t),
// incidence travelling toward +x:
//   p_i = sum_n eps_n i^n J_n(k r) cos(n theta),  eps_0 = 1, eps_n = 2.
// Scattered wave p_s = sum_n c_n H1_n(k r) cos(n theta).

struct MieProblem {
  double radius = 0.5;      // m
  double frequency = 1e3;   // Hz
  FluidMaterial exterior = materials::water();
  std::variant<ElasticMaterial, FluidMaterial> interior = materials::steel();

  double omega() const { return 2.0 * M_PI * frequency; }
  double x3() const { return omega() * radius / exterior.sound_speed(); }
  // x1, x2 require an elastic interior (pressure and shear wavenumber * radius).
  double x1() const;
  double x2() const;
};

struct MieCoefficients {
  int n_max = 0;
  std::vector<cplx> a, b, c;  // orders 0..n_max; a,b are interior potential coefficients
};

int default_n_max(double x3);  // ceil(x3) + 12

// Boundary-condition system for order n of the elastic cylinder: M * (a_n, b_n, c_n)^T = rhs.
// Throws NumericError if the interior has zero shear speed (use the fluid solver instead).
struct ElasticSystem {
  std::array<std::array<cplx, 3>, 3> m;
  std::array<cplx, 3> rhs;
};
ElasticSystem assemble_elastic_system(const MieProblem& problem, int n);

// Solves the per-order systems by Cramer's rule (c_n = det V_n / det M_n).
MieCoefficients solve_coefficients_cramer(const MieProblem& problem, int n_max);

// Penetrable fluid cylinder from pressure / normal-velocity continuity; the
// mu -> 0 oracle for the elastic system. a,b are returned zero.
MieCoefficients fluid_cylinder_coefficients(double radius, double frequency,
                                            const FluidMaterial& exterior,
                                            const FluidMaterial& interior, int n_max);

// Far-field amplitude f(theta) in the convention p_s ~ f(theta) e^{ikr}/sqrt(r):
//   f(theta) = sqrt(2/(pi k)) e^{-i pi/4} sum_n c_n (-i)^n cos(n theta).
cplx far_field_complex(const MieCoefficients& coeffs, double k, double theta);
std::vector<double> far_field_from_coefficients(const MieCoefficients& coeffs, double k,
                                                std::span<const double> angles);

// sigma = integral |f|^2 dtheta = (2/k) (2|c_0|^2 + sum_{n>=1} |c_n|^2).
double scattering_cross_section(const MieCoefficients& coeffs, double k);

inline double eps_n(int n) { return n == 0 ? 1.0 : 2.0; }
cplx ipow(int n);  // i^n

}  // namespace aisr::mie
