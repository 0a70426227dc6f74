#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "infexplore/reservoir.hpp"
#include "infexplore/run_record.hpp"

// Fixed-budget selection: study one arm at a time against a precomputed
// checkpoint/threshold schedule whose late phase moves in theta space, plus
// the multi-accept variant and the unknown-target reductions.

namespace infexplore {

struct BudgetScheduleParams {
  std::uint64_t budget = 0;  // N
  double rho = 0.05;         // batch growth
  double rho1 = 0.05;        // initial-block scale
  double rho2 = 0.1;         // threshold slack
  double alpha = 0.0;        // target quantile value
  double beta = 0.0;         // acceptance floor

  void validate() const;
};

// Checkpoint sizes b_k and rejection thresholds tau_k.
//   phase 0 (k = 0):        b_0 = ceil(rho1 ln^2 N),    reject if phat <= alpha - rho
//   phase 1 (1 <= k <= k0): b_k = round(b_0 (1+rho)^k), reject if phat <= tau_k
//   phase 2 (j >= 1):       b = ceil((1+rho)^j b_k0),   reject if theta(phat) <= tau
// Thresholds that fall below 0 make the check vacuously false. The arrays
// grow lazily once checkpoints pass the budget.
class BudgetSchedule {
 public:
  explicit BudgetSchedule(const BudgetScheduleParams& params);

  const BudgetScheduleParams& params() const { return params_; }
  std::size_t k0() const { return k0_; }
  double log_budget() const { return log_n_; }
  double theta_decrement() const { return theta_decrement_; }

  // Ensures checkpoint k exists.
  void ensure(std::size_t k);
  std::size_t generated() const { return checkpoints_.size(); }

  std::uint64_t checkpoint(std::size_t k) const { return checkpoints_[k]; }
  // Raw (unclamped) threshold; compare in theta space for phase 2.
  double threshold_raw(std::size_t k) const { return thresholds_raw_[k]; }
  // Clamped to [0,1] (raw phases) or [0,pi] (theta phase) for reporting.
  double threshold_clamped(std::size_t k) const { return thresholds_[k]; }
  int phase(std::size_t k) const { return k == 0 ? 0 : (k <= k0_ ? 1 : 2); }

 private:
  void append_checkpoint(std::size_t k);

  BudgetScheduleParams params_;
  double log_n_ = 0.0;
  std::size_t k0_ = 0;
  double theta_phase_start_ = 0.0;  // theta(alpha - 2 rho)
  double theta_decrement_ = 0.0;    // d_F(alpha,beta) rho (1-rho2) / ln N
  std::uint64_t b_k0_ = 0;
  std::vector<std::uint64_t> checkpoints_;
  std::vector<double> thresholds_raw_;
  std::vector<double> thresholds_;
};

BudgetSchedule build_schedule(const BudgetScheduleParams& params);

bool should_reject(const BudgetSchedule& s, std::size_t k, double phat);

struct TraceEvent {
  std::size_t arm = 0;
  std::size_t checkpoint = 0;
  std::uint64_t pulls = 0;
  double phat = 0.0;
  double threshold = 0.0;
  int phase = 0;
  bool rejected = false;
};
using TraceFn = std::function<void(const TraceEvent&)>;

// Runs until the environment budget dies, then outputs the arm currently
// under study (there is always one, even if it never completed a
// checkpoint). success/true_mean are left unset; use the scored wrapper.
RunRecord run_fixed_budget(ArmSource& env, BudgetSchedule& s,
                           const TraceFn& trace = {});

// Same, on a concrete environment, scoring success as true mean >= beta.
RunRecord run_fixed_budget_scored(BanditEnv& env, BudgetSchedule& s,
                                  const TraceFn& trace = {});

struct MultiArmSizes {
  std::uint64_t per_arm_cap = 0;   // M = ceil(N / ln^{3/2} N)
  std::uint64_t total_budget = 0;  // N + ceil(2 N / ln^{1/2} N)
};
MultiArmSizes multi_arm_sizes(std::uint64_t n);

struct MultiArmResult {
  std::vector<std::size_t> accepted;
  std::vector<double> accepted_means;  // filled by the scored wrapper
  std::uint64_t samples_used = 0;
  std::uint64_t arms_touched = 0;
  bool success = false;  // >= ln N accepted, all true means >= beta
};

// Accepts every arm that survives M pulls unrejected and keeps going until
// the (enlarged) budget dies. The environment budget must be set to
// multi_arm_sizes(N).total_budget.
MultiArmResult run_multi_arm(ArmSource& env, BudgetSchedule& s);
MultiArmResult run_multi_arm_scored(BanditEnv& env, BudgetSchedule& s);

// Comparison floor: floor(sqrt(N)) arms, floor(sqrt(N)) pulls each, output
// the best empirical mean. success is scored against `beta`.
RunRecord uniform_allocation_baseline(BanditEnv& env, std::uint64_t n, double beta);

// ---------------------------------------------------------------------------
// Reductions to a known target value. Each estimates a quantile statistic
// first, then spends the remaining budget on the threshold schedule. The
// estimation stage is capped to `estimation_budget_fraction` of N; whenever a
// derived parameter leaves its valid range at small N, it is clamped and the
// run is flagged degenerate.

struct ReductionParams {
  std::uint64_t budget = 0;  // N
  double rho = 0.05;
  double rho1 = 0.05;
  double rho2 = 0.1;
  double c_const = 4.0;
  double estimation_budget_fraction = 0.25;
};

struct ReductionStats {
  double alpha_hat = 0.0;
  double alpha_run = 0.0;
  double beta_run = 0.0;
  std::uint64_t estimation_samples = 0;
  bool estimation_truncated = false;  // budget died during estimation
};

// Number of estimator stages J = ceil(6 / (eps (eta1 - eta2))) whose
// averaged outputs form the quantile-average estimate.
std::uint64_t averaged_quantile_stages(double eps, double eta1, double eta2);

// Averaged-quantile target: J = ceil(6 / (eps (eta1 - eta2))) estimator runs
// over a grid of quantiles, averaged; success is measured against
// quantile_average(eta1, eta2) - eps.
RunRecord reduce_unknown_alpha_avg(BanditEnv& env, const ReductionParams& rp,
                                   double eta1, double eta2, double eps,
                                   ReductionStats* stats = nullptr);

// For reservoirs whose target quantile value is at least (1+eps)/2; success
// against inverse_cdf(1 - eta) - eps.
RunRecord reduce_alpha_above_half(BanditEnv& env, const ReductionParams& rp,
                                  double eta, double eps,
                                  ReductionStats* stats = nullptr);

// Essential-supremum target: success against ess_sup - eps1, for eps1 > eps.
RunRecord reduce_ess_sup(BanditEnv& env, const ReductionParams& rp, double eps,
                         double eps1, ReductionStats* stats = nullptr);

}  // namespace infexplore
