#pragma once

#include <cstdint>

// Exact discrete-distribution primitives. Everything is computed in log
// space through lgamma and exponentiated last, so counts up to the schedule
// sizes used by the simulator stay finite.

namespace infexplore::stats {

double log_choose(std::uint64_t n, std::uint64_t k);

// C(n,k) p^k (1-p)^(n-k). Throws std::domain_error for k > n or p outside
// [0,1].
double binom_pmf(std::uint64_t n, double p, std::uint64_t k);
double binom_log_pmf(std::uint64_t n, double p, std::uint64_t k);

// P[Bin(n,p) <= k].
double binom_cdf(std::uint64_t n, double p, std::uint64_t k);

// log P[Bin(n,p) <= k]; stays meaningful in the far lower tail.
double binom_log_cdf(std::uint64_t n, double p, std::uint64_t k);

// HyperGeom(A, B, C): population A, sample B, C marked; pmf at k is
// C(B,k) C(A-B, C-k) / C(A,C). Throws std::domain_error when the counts are
// incompatible (B > A, C > A) or k is outside the support.
double hypergeom_pmf(std::uint64_t A, std::uint64_t B, std::uint64_t C,
                     std::uint64_t k);

std::uint64_t hypergeom_support_min(std::uint64_t A, std::uint64_t B,
                                    std::uint64_t C);
std::uint64_t hypergeom_support_max(std::uint64_t A, std::uint64_t B,
                                    std::uint64_t C);

// Two-sided moderate-deviation reference rate exp(-Delta^2 n / (2 p (1-p))).
// Throws std::domain_error for p in {0,1}.
double moderate_rate(double p, double delta, std::uint64_t n);

// KL(q || p) for Bernoulli parameters, with 0 log 0 = 0.
double kl_bernoulli(double q, double p);

struct TailBoundReport {
  std::uint64_t n = 0;
  double p = 0.0;
  double delta = 0.0;
  double exact_tail = 0.0;      // P[Bin(n,p)/n <= p - delta]
  double rate_bound = 0.0;      // moderate_rate(p, delta, n)
  double log_exact_tail = 0.0;  // log forms stay usable after underflow
  double log_rate_bound = 0.0;
};

TailBoundReport binomial_tail_report(std::uint64_t n, double p, double delta);

// Convex test functions for the dominance check.
struct ConvexTestFn {
  enum class Kind { Square, ExpScaled, AbsDeviation };
  Kind kind = Kind::Square;
  double param = 0.0;  // t for exp(t x), m for |x - m|
  double operator()(double x) const;
};

struct ConvexDominanceReport {
  double hypergeom_expectation = 0.0;
  double binom_expectation = 0.0;
  bool holds = false;  // E f(HyperGeom(A,B,C)) <= E f(Bin(B, C/A)) + fp slack
};

// Exhaustive check of E[f(HyperGeom(A,B,C))] <= E[f(Bin(B, C/A))]. Capped at
// A <= 40 to keep enumeration instant.
ConvexDominanceReport convex_dominance_check(std::uint64_t A, std::uint64_t B,
                                             std::uint64_t C,
                                             const ConvexTestFn& f);

}  // namespace infexplore::stats
