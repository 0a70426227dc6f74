#include "infexplore/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace infexplore::stats {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_prob(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("probability outside [0,1]");
}

void check_hypergeom(std::uint64_t A, std::uint64_t B, std::uint64_t C) {
  if (B > A || C > A) throw std::domain_error("hypergeometric counts incompatible");
}

}  // namespace

double log_choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return kNegInf;
  // 80-bit lgamma: the cancellation between the three terms leaves ~1e-14
  // relative error in the pmf even at n = 10^6.
  long double v = std::lgammal(static_cast<long double>(n) + 1.0L) -
                  std::lgammal(static_cast<long double>(k) + 1.0L) -
                  std::lgammal(static_cast<long double>(n - k) + 1.0L);
  return static_cast<double>(v);
}

double binom_log_pmf(std::uint64_t n, double p, std::uint64_t k) {
  check_prob(p);
  if (k > n) throw std::domain_error("binomial count k > n");
  if (p == 0.0) return k == 0 ? 0.0 : kNegInf;
  if (p == 1.0) return k == n ? 0.0 : kNegInf;
  long double lp = std::lgammal(static_cast<long double>(n) + 1.0L) -
                   std::lgammal(static_cast<long double>(k) + 1.0L) -
                   std::lgammal(static_cast<long double>(n - k) + 1.0L) +
                   static_cast<long double>(k) * std::log(static_cast<long double>(p)) +
                   static_cast<long double>(n - k) * std::log1p(static_cast<long double>(-p));
  return static_cast<double>(lp);
}

double binom_pmf(std::uint64_t n, double p, std::uint64_t k) {
  return std::exp(binom_log_pmf(n, p, k));
}

namespace {

// Sum of pmf terms j = k, k-1, ... relative to the anchor pmf(k), via the
// exact ratio pmf(j-1)/pmf(j) = j (1-p) / ((n-j+1) p). One lgamma anchor,
// then plain multiplications.
double lower_sum_relative(std::uint64_t n, double p, std::uint64_t k) {
  double ratio_base = (1.0 - p) / p;
  double term = 1.0;
  double sum = 1.0;
  for (std::uint64_t j = k; j > 0; --j) {
    term *= static_cast<double>(j) * ratio_base / static_cast<double>(n - j + 1);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// Same upward from the anchor a: pmf(j+1)/pmf(j) = (n-j) p / ((j+1)(1-p)).
double upper_sum_relative(std::uint64_t n, double p, std::uint64_t a) {
  double ratio_base = p / (1.0 - p);
  double term = 1.0;
  double sum = 1.0;
  for (std::uint64_t j = a; j < n; ++j) {
    term *= static_cast<double>(n - j) * ratio_base / static_cast<double>(j + 1);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

}  // namespace

double binom_cdf(std::uint64_t n, double p, std::uint64_t k) {
  check_prob(p);
  if (k >= n) return 1.0;
  if (p == 0.0) return 1.0;
  if (p == 1.0) return 0.0;  // k < n here
  // Sum the shorter side of the distribution.
  double mean = static_cast<double>(n) * p;
  if (static_cast<double>(k) <= mean) {
    double sum = binom_pmf(n, p, k) * lower_sum_relative(n, p, k);
    return std::min(sum, 1.0);
  }
  double upper = binom_pmf(n, p, k + 1) * upper_sum_relative(n, p, k + 1);
  return std::clamp(1.0 - upper, 0.0, 1.0);
}

double binom_log_cdf(std::uint64_t n, double p, std::uint64_t k) {
  check_prob(p);
  if (k >= n) return 0.0;
  if (p == 0.0) return 0.0;
  if (p == 1.0) return kNegInf;
  if (static_cast<double>(k) > static_cast<double>(n) * p) {
    return std::log(binom_cdf(n, p, k));  // not a small tail, no underflow
  }
  double lmax = binom_log_pmf(n, p, k);
  if (lmax == kNegInf) return kNegInf;
  return std::min(lmax + std::log(lower_sum_relative(n, p, k)), 0.0);
}

std::uint64_t hypergeom_support_min(std::uint64_t A, std::uint64_t B,
                                    std::uint64_t C) {
  check_hypergeom(A, B, C);
  std::uint64_t slack = A - B;  // unmarked capacity outside the sample
  return C > slack ? C - slack : 0;
}

std::uint64_t hypergeom_support_max(std::uint64_t A, std::uint64_t B,
                                    std::uint64_t C) {
  check_hypergeom(A, B, C);
  return std::min(B, C);
}

double hypergeom_pmf(std::uint64_t A, std::uint64_t B, std::uint64_t C,
                     std::uint64_t k) {
  check_hypergeom(A, B, C);
  if (k > std::min(B, C)) throw std::domain_error("hypergeometric k above support");
  if (C - k > A - B) throw std::domain_error("hypergeometric k below support");
  double lp = log_choose(B, k) + log_choose(A - B, C - k) - log_choose(A, C);
  return std::exp(lp);
}

double moderate_rate(double p, double delta, std::uint64_t n) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("moderate_rate needs p in (0,1)");
  if (delta < 0.0) throw std::domain_error("moderate_rate needs delta >= 0");
  return std::exp(-delta * delta * static_cast<double>(n) / (2.0 * p * (1.0 - p)));
}

double kl_bernoulli(double q, double p) {
  check_prob(q);
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("kl_bernoulli needs p in (0,1)");
  double term1 = q == 0.0 ? 0.0 : q * std::log(q / p);
  double term2 = q == 1.0 ? 0.0 : (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
  return term1 + term2;
}

TailBoundReport binomial_tail_report(std::uint64_t n, double p, double delta) {
  TailBoundReport r;
  r.n = n;
  r.p = p;
  r.delta = delta;
  double cut = static_cast<double>(n) * (p - delta);
  if (cut < 0.0) {
    r.exact_tail = 0.0;
    r.log_exact_tail = kNegInf;
  } else {
    auto k = static_cast<std::uint64_t>(std::floor(cut));
    r.log_exact_tail = binom_log_cdf(n, p, k);
    r.exact_tail = std::exp(r.log_exact_tail);
  }
  r.log_rate_bound =
      -delta * delta * static_cast<double>(n) / (2.0 * p * (1.0 - p));
  r.rate_bound = std::exp(r.log_rate_bound);
  return r;
}

double ConvexTestFn::operator()(double x) const {
  switch (kind) {
    case Kind::Square:
      return x * x;
    case Kind::ExpScaled:
      return std::exp(param * x);
    case Kind::AbsDeviation:
      return std::abs(x - param);
  }
  return 0.0;
}

ConvexDominanceReport convex_dominance_check(std::uint64_t A, std::uint64_t B,
                                             std::uint64_t C,
                                             const ConvexTestFn& f) {
  if (A > 40) throw std::domain_error("convex_dominance_check capped at A <= 40");
  check_hypergeom(A, B, C);
  ConvexDominanceReport rep;
  for (std::uint64_t k = hypergeom_support_min(A, B, C);
       k <= hypergeom_support_max(A, B, C); ++k) {
    rep.hypergeom_expectation +=
        hypergeom_pmf(A, B, C, k) * f(static_cast<double>(k));
  }
  double p = A == 0 ? 0.0 : static_cast<double>(C) / static_cast<double>(A);
  for (std::uint64_t k = 0; k <= B; ++k) {
    rep.binom_expectation += binom_pmf(B, p, k) * f(static_cast<double>(k));
  }
  double slack = 1e-12 * std::max(1.0, std::abs(rep.binom_expectation));
  rep.holds = rep.hypergeom_expectation <= rep.binom_expectation + slack;
  return rep;
}

}  // namespace infexplore::stats
