#include "infexplore/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace infexplore::fisher {

namespace {

void check_mean(double a) {
  if (!(a >= 0.0 && a <= 1.0)) {
    throw std::domain_error("mean outside [0,1]");
  }
}

// Integrand of d_F after x = (1 - cos u) / 2, evaluated numerically (no
// algebraic cancellation) so quadrature stays an independent route.
double substituted_integrand(double u) {
  double x = (1.0 - std::cos(u)) / 2.0;
  double g = x * (1.0 - x);
  if (g <= 0.0) return 1.0;  // removable endpoint limit
  return (std::sin(u) / 2.0) / std::sqrt(g);
}

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson(double a, double b, double fa, double fm, double fb,
                        double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m);
  double rm = 0.5 * (m + b);
  double flm = substituted_integrand(lm);
  double frm = substituted_integrand(rm);
  double left = simpson(a, m, fa, flm, fm);
  double right = simpson(m, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
    return left + right + (left + right - whole) / 15.0;
  }
  return adaptive_simpson(a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
         adaptive_simpson(m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace

double theta(double a) {
  check_mean(a);
  return std::acos(std::clamp(1.0 - 2.0 * a, -1.0, 1.0));
}

double theta_inv(double t) {
  constexpr double kPi = 3.14159265358979323846;
  if (!(t >= 0.0 && t <= kPi)) {
    throw std::domain_error("theta value outside [0,pi]");
  }
  return (1.0 - std::cos(t)) / 2.0;
}

double fisher_distance(double a, double b) {
  return std::abs(theta(a) - theta(b));
}

double rate_constant(double alpha, double beta) {
  check_mean(alpha);
  check_mean(beta);
  if (!(beta < alpha)) {
    throw std::domain_error("rate_constant requires beta < alpha");
  }
  double d = fisher_distance(alpha, beta);
  return d * d / 2.0;
}

double fisher_distance_quadrature(double alpha, double beta, double abs_tol) {
  if (!(beta < alpha)) {
    throw std::domain_error("quadrature requires beta < alpha");
  }
  double a = theta(beta);
  double b = theta(alpha);
  double fa = substituted_integrand(a);
  double fb = substituted_integrand(b);
  double fm = substituted_integrand(0.5 * (a + b));
  double whole = simpson(a, b, fa, fm, fb);
  return adaptive_simpson(a, b, fa, fm, fb, whole, abs_tol, 40);
}

}  // namespace infexplore::fisher
