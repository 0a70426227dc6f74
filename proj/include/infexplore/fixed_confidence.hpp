#pragma once

#include <cstdint>
#include <optional>

#include "infexplore/reservoir.hpp"
#include "infexplore/run_record.hpp"

// Fixed-confidence selection: estimate the target quantile value from many
// cheap arms, then hunt for a single arm that clears the estimate.

namespace infexplore {

struct ConfidenceParams {
  double eta = 0.1;
  double eps = 0.1;
  double delta = 0.1;
  double c_const = 4.0;

  void validate() const;
};

struct QuantileSizes {
  std::uint64_t arms = 0;           // K
  std::uint64_t pulls_per_arm = 0;  // n
  std::uint64_t order_index = 0;    // k, 1-based rank from the top
};

struct QuantileEstimate {
  double alpha_hat = 0.0;
  QuantileSizes sizes;
  std::uint64_t samples_used = 0;  // exactly K * n
};

// K = ceil(C eta1 log(1/delta) / eta2^2), n = ceil(C log(1/eta2) / eps^2),
// k = max(1, ceil(K (eta1 - eta2/2))). log(1/delta) is passed in log form so
// schedules with astronomically small delta stay finite.
QuantileSizes quantile_sizes(double eta1, double eta2, double eps,
                             double log_inv_delta, double c_const);

// Runs the estimator with explicit sizes (used by the budget reductions,
// which cap K against a sample slice).
QuantileEstimate estimate_quantile_sized(ArmSource& env, const QuantileSizes& sz);

// Samples K fresh arms n times each and returns the k-th largest empirical
// mean. Parameters must lie in (0, 1/2] with eta2 <= eta1.
QuantileEstimate estimate_quantile(ArmSource& env, double eta1, double eta2,
                                   double eps, double delta, double c_const = 4.0);

// Tries fresh arms, n2 = ceil(C log(1/(eta delta)) / eps^2) pulls each, and
// returns the first with empirical mean >= alpha_hat - eps/3. Gives up (and
// returns nullopt, declaring failure) after ceil(C log(1/delta) / eta) arms.
std::optional<std::size_t> accept_loop(ArmSource& env, double eta, double eps,
                                       double delta, double alpha_hat,
                                       double c_const = 4.0);

std::uint64_t accept_loop_arm_cap(double eta, double delta, double c_const);
std::uint64_t accept_loop_pulls_per_arm(double eta, double eps, double delta,
                                        double c_const);

// Quantile estimation with (eta, eta/2) followed by the accept loop. Success
// means an arm was output and its hidden mean is at least
// inverse_cdf(1 - eta) - eps.
RunRecord solve_fixed_confidence(BanditEnv& env, const ConfidenceParams& params);

}  // namespace infexplore
