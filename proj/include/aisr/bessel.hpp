#pragma once

#include <complex>

namespace aisr::mie {

// Cylinder Bessel functions of integer order. Thin wrappers over the C++17
// special functions plus the derivative identities the scattering series
// needs. Relative accuracy ~1e-14 over n <= 60, x <= 200 (away from zeros).

double bessel_j(int n, double x);        // J_n(x), x >= 0
double bessel_j_prime(int n, double x);  // J_n'(x) = (J_{n-1} - J_{n+1})/2
// J_n''(x) from the Bessel ODE: -J_n(x)(1 - n^2/x^2) - J_n'(x)/x.
double bessel_j_second(int n, double x);

double bessel_y(int n, double x);        // Y_n(x), x > 0
double bessel_y_prime(int n, double x);

std::complex<double> hankel1(int n, double x);        // J_n + i Y_n, x > 0
std::complex<double> hankel1_prime(int n, double x);

}  // namespace aisr::mie
