#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "infexplore/fisher.hpp"

using namespace infexplore;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("theta endpoints and midpoint") {
  CHECK(fisher::theta(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(fisher::theta(0.5) == doctest::Approx(kPi / 2).epsilon(1e-15));
  CHECK(fisher::theta(1.0) == doctest::Approx(kPi).epsilon(1e-15));
  CHECK_THROWS_AS(fisher::theta(-0.01), std::domain_error);
  CHECK_THROWS_AS(fisher::theta(1.01), std::domain_error);
}

TEST_CASE("theta_inv inverts theta") {
  CHECK(fisher::theta_inv(kPi / 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fisher::theta_inv(0.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(fisher::theta_inv(fisher::theta(0.3)) - 0.3) <= 1e-12);
  CHECK_THROWS_AS(fisher::theta_inv(-0.1), std::domain_error);
  CHECK_THROWS_AS(fisher::theta_inv(kPi + 0.1), std::domain_error);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    double a = unif(rng);
    CHECK(std::abs(fisher::theta_inv(fisher::theta(a)) - a) <= 1e-12);
  }
}

TEST_CASE("distance identities") {
  CHECK(fisher::fisher_distance(0.3, 0.3) == 0.0);
  CHECK(std::abs(fisher::fisher_distance(0.0, 1.0) - kPi) <= 1e-12);
  CHECK(fisher::fisher_distance(0.25, 0.75) ==
        doctest::Approx(kPi / 3).epsilon(1e-12));
  CHECK(fisher::fisher_distance(0.2, 0.7) ==
        doctest::Approx(fisher::fisher_distance(0.7, 0.2)).epsilon(1e-15));
}

TEST_CASE("distance dominates 2|a-b| and stays below pi") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double a = unif(rng), b = unif(rng);
    double d = fisher::fisher_distance(a, b);
    CHECK(d >= 2.0 * std::abs(a - b) - 1e-12);
    CHECK(d <= kPi + 1e-12);
  }
}

TEST_CASE("rate constant values") {
  CHECK(fisher::rate_constant(1.0, 0.0) ==
        doctest::Approx(kPi * kPi / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(fisher::rate_constant(0.4, 0.4), std::domain_error);
  CHECK_THROWS_AS(fisher::rate_constant(0.3, 0.4), std::domain_error);
  CHECK(fisher::rate_constant(0.5, 0.5 - 1e-9) < 1e-17);
  // narrower window further from the center is larger
  CHECK(fisher::rate_constant(0.4, 0.3) < fisher::rate_constant(0.3, 0.2));
}

TEST_CASE("rate constant bounded by pi^2/2") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    double a = unif(rng), b = unif(rng);
    if (a == b) continue;
    double c = fisher::rate_constant(std::max(a, b), std::min(a, b));
    CHECK(c <= kPi * kPi / 2.0 + 1e-12);
  }
}

TEST_CASE("quadrature route matches the closed form") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(0.001, 0.999);
  for (int i = 0; i < 200; ++i) {
    double a = unif(rng), b = unif(rng);
    double alpha = std::max(a, b), beta = std::min(a, b);
    if (alpha - beta < 1e-6) continue;
    double dq = fisher::fisher_distance_quadrature(alpha, beta, 1e-11);
    double cq = dq * dq / 2.0;
    CHECK(std::abs(cq - fisher::rate_constant(alpha, beta)) <= 1e-8);
  }
}

// For a fixed gap, the rate constant is smallest when the window is centered
// at 1/2 and grows toward either edge. (Toward 1 it is increasing; the
// mirrored statement holds below 1/2.)
TEST_CASE("rate constant monotone on either side of the center") {
  const double eps = 0.2;
  double prev = fisher::rate_constant((1.0 + eps) / 2.0, (1.0 - eps) / 2.0);
  for (double alpha = (1.0 + eps) / 2.0 + 0.01; alpha < 0.999; alpha += 0.01) {
    double c = fisher::rate_constant(alpha, alpha - eps);
    CHECK(c >= prev - 1e-12);
    prev = c;
  }
  prev = fisher::rate_constant((1.0 + eps) / 2.0, (1.0 - eps) / 2.0);
  for (double alpha = (1.0 + eps) / 2.0 - 0.01; alpha - eps > 0.001; alpha -= 0.01) {
    double c = fisher::rate_constant(alpha, alpha - eps);
    CHECK(c >= prev - 1e-12);
    prev = c;
  }
}
