#include "aisr/bessel.hpp"

#include <cmath>
#include <stdexcept>

namespace aisr::mie {

namespace {
void check_order(int n) {
  if (n < 0) throw std::domain_error("bessel: order must be non-negative");
}
}  // namespace

double bessel_j(int n, double x) {
  check_order(n);
  if (x < 0.0) throw std::domain_error("bessel_j: x must be >= 0");
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::cyl_bessel_j(static_cast<double>(n), x);
}

double bessel_j_prime(int n, double x) {
  check_order(n);
  if (n == 0) return -bessel_j(1, x);
  return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x));
}

double bessel_j_second(int n, double x) {
  check_order(n);
  if (x == 0.0) {
    // Series limits: J_0'' = -1/2, J_2'' = 1/4, others vanish.
    if (n == 0) return -0.5;
    if (n == 2) return 0.25;
    return 0.0;
  }
  const double nn = static_cast<double>(n) * n;
  return -bessel_j(n, x) * (1.0 - nn / (x * x)) - bessel_j_prime(n, x) / x;
}

double bessel_y(int n, double x) {
  check_order(n);
  if (x <= 0.0) throw std::domain_error("bessel_y: x must be > 0 (logarithmic singularity)");
  return std::cyl_neumann(static_cast<double>(n), x);
}

double bessel_y_prime(int n, double x) {
  check_order(n);
  if (x <= 0.0) throw std::domain_error("bessel_y_prime: x must be > 0");
  if (n == 0) return -bessel_y(1, x);
  return 0.5 * (bessel_y(n - 1, x) - bessel_y(n + 1, x));
}

std::complex<double> hankel1(int n, double x) {
  return {bessel_j(n, x), bessel_y(n, x)};
}

std::complex<double> hankel1_prime(int n, double x) {
  return {bessel_j_prime(n, x), bessel_y_prime(n, x)};
}

}  // namespace aisr::mie
