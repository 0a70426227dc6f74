#include "infexplore/fixed_budget.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "infexplore/fisher.hpp"
#include "infexplore/fixed_confidence.hpp"

namespace infexplore {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Equality is allowed (within fp slack): alpha - 2 rho == beta puts the
// theta-phase start exactly at theta(beta), which is still a valid schedule.
bool theta_phase_feasible(double alpha, double beta, double rho) {
  return alpha - 2.0 * rho >= beta - 1e-12;
}

}  // namespace

void BudgetScheduleParams::validate() const {
  if (budget < 2) throw std::domain_error("budget must be >= 2");
  auto unit = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
      throw std::domain_error(std::string(name) + " must lie in (0,1)");
    }
  };
  unit(rho, "rho");
  unit(rho1, "rho1");
  unit(rho2, "rho2");
  if (!(beta > 0.0 && beta < alpha && alpha < 1.0)) {
    throw std::domain_error("need 0 < beta < alpha < 1");
  }
  if (!theta_phase_feasible(alpha, beta, rho)) {
    throw std::domain_error("alpha - 2 rho below beta: theta-phase thresholds "
                            "would start below theta(beta)");
  }
}

BudgetSchedule::BudgetSchedule(const BudgetScheduleParams& params)
    : params_(params) {
  params_.validate();
  log_n_ = std::log(static_cast<double>(params_.budget));
  double l2 = log_n_ * log_n_;
  double l4 = l2 * l2;
  auto b0 = static_cast<std::uint64_t>(std::ceil(params_.rho1 * l2));
  b0 = std::max<std::uint64_t>(b0, 1);
  double ratio = l4 / static_cast<double>(b0);
  k0_ = ratio > 1.0
            ? static_cast<std::size_t>(
                  std::ceil(std::log(ratio) / std::log1p(params_.rho)))
            : 0;
  theta_phase_start_ = fisher::theta(std::clamp(
      params_.alpha - 2.0 * params_.rho, 0.0, 1.0));
  theta_decrement_ = fisher::fisher_distance(params_.alpha, params_.beta) *
                     params_.rho * (1.0 - params_.rho2) / log_n_;
  checkpoints_.push_back(b0);
  thresholds_raw_.push_back(params_.alpha - params_.rho);
  thresholds_.push_back(std::clamp(thresholds_raw_[0], 0.0, 1.0));
  while (checkpoints_.back() <= params_.budget) {
    append_checkpoint(checkpoints_.size());
  }
}

void BudgetSchedule::append_checkpoint(std::size_t k) {
  const double growth = 1.0 + params_.rho;
  std::uint64_t prev = checkpoints_.back();
  std::uint64_t b;
  double tau;
  if (k <= k0_) {
    double raw = static_cast<double>(checkpoints_[0]) * std::pow(growth, static_cast<double>(k));
    b = static_cast<std::uint64_t>(std::llround(raw));
    if (k == k0_) {
      double l2 = log_n_ * log_n_;
      auto l4 = static_cast<std::uint64_t>(std::ceil(l2 * l2));
      b = std::max(b, l4);
    }
    tau = params_.alpha - params_.rho -
          static_cast<double>(k) / std::sqrt(log_n_);
    thresholds_.push_back(std::clamp(tau, 0.0, 1.0));
  } else {
    std::size_t j = k - k0_;
    if (b_k0_ == 0) b_k0_ = checkpoints_[k0_];
    double raw = std::pow(growth, static_cast<double>(j)) * static_cast<double>(b_k0_);
    b = static_cast<std::uint64_t>(std::ceil(raw));
    tau = theta_phase_start_ - static_cast<double>(j) * theta_decrement_;
    thresholds_.push_back(std::clamp(tau, 0.0, kPi));
  }
  b = std::max(b, prev + 1);  // keep checkpoints strictly increasing
  checkpoints_.push_back(b);
  thresholds_raw_.push_back(tau);
}

void BudgetSchedule::ensure(std::size_t k) {
  while (checkpoints_.size() <= k) append_checkpoint(checkpoints_.size());
}

BudgetSchedule build_schedule(const BudgetScheduleParams& params) {
  return BudgetSchedule(params);
}

bool should_reject(const BudgetSchedule& s, std::size_t k, double phat) {
  double raw = s.threshold_raw(k);
  if (raw < 0.0) return false;  // clamped-away threshold: vacuous check
  if (s.phase(k) < 2) return phat <= raw;
  return fisher::theta(phat) <= raw;
}

RunRecord run_fixed_budget(ArmSource& env, BudgetSchedule& s, const TraceFn& trace) {
  if (!env.budget()) {
    throw std::domain_error("fixed-budget run needs an environment budget");
  }
  std::size_t current = 0;
  try {
    while (true) {
      std::size_t i = env.fresh_arm_index();
      current = i;
      for (std::size_t k = 0;; ++k) {
        s.ensure(k);
        std::uint64_t target = s.checkpoint(k);
        if (target > env.pulls(i)) env.pull_many(i, target - env.pulls(i));
        double phat = env.empirical_mean(i);
        bool rejected = should_reject(s, k, phat);
        if (trace) {
          trace(TraceEvent{i, k, target, phat, s.threshold_clamped(k),
                           s.phase(k), rejected});
        }
        if (rejected) break;
      }
    }
  } catch (const BudgetExhausted&) {
    // Output whatever was under study, even mid-checkpoint.
  }
  RunRecord rec;
  rec.chosen = current;
  rec.samples_used = env.samples_used();
  rec.arms_touched = env.arms_touched();
  return rec;
}

RunRecord run_fixed_budget_scored(BanditEnv& env, BudgetSchedule& s,
                                  const TraceFn& trace) {
  RunRecord rec = run_fixed_budget(env, s, trace);
  rec.true_mean = env.true_mean(*rec.chosen);
  rec.success = rec.true_mean >= s.params().beta;
  return rec;
}

MultiArmSizes multi_arm_sizes(std::uint64_t n) {
  double l = std::log(static_cast<double>(n));
  MultiArmSizes ms;
  ms.per_arm_cap = static_cast<std::uint64_t>(
      std::ceil(static_cast<double>(n) / std::pow(l, 1.5)));
  ms.total_budget =
      n + static_cast<std::uint64_t>(std::ceil(2.0 * static_cast<double>(n) / std::sqrt(l)));
  return ms;
}

MultiArmResult run_multi_arm(ArmSource& env, BudgetSchedule& s) {
  if (!env.budget()) {
    throw std::domain_error("multi-arm run needs an environment budget");
  }
  const MultiArmSizes ms = multi_arm_sizes(s.params().budget);
  MultiArmResult out;
  try {
    while (true) {
      std::size_t i = env.fresh_arm_index();
      for (std::size_t k = 0;; ++k) {
        s.ensure(k);
        std::uint64_t target = s.checkpoint(k);
        bool capped = target >= ms.per_arm_cap;
        if (capped) target = ms.per_arm_cap;
        if (target > env.pulls(i)) env.pull_many(i, target - env.pulls(i));
        if (capped) {
          // Survived the per-arm cap without rejection: accept, move on.
          out.accepted.push_back(i);
          break;
        }
        if (should_reject(s, k, env.empirical_mean(i))) break;
      }
    }
  } catch (const BudgetExhausted&) {}
  out.samples_used = env.samples_used();
  out.arms_touched = env.arms_touched();
  return out;
}

MultiArmResult run_multi_arm_scored(BanditEnv& env, BudgetSchedule& s) {
  MultiArmResult out = run_multi_arm(env, s);
  out.accepted_means.reserve(out.accepted.size());
  bool all_good = true;
  for (std::size_t i : out.accepted) {
    double m = env.true_mean(i);
    out.accepted_means.push_back(m);
    all_good = all_good && m >= s.params().beta;
  }
  double need = std::log(static_cast<double>(s.params().budget));
  out.success = all_good && static_cast<double>(out.accepted.size()) >= need;
  return out;
}

RunRecord uniform_allocation_baseline(BanditEnv& env, std::uint64_t n, double beta) {
  auto m = static_cast<std::uint64_t>(std::floor(std::sqrt(static_cast<double>(n))));
  m = std::max<std::uint64_t>(m, 1);
  std::size_t best = 0;
  double best_mean = -1.0;
  for (std::uint64_t a = 0; a < m; ++a) {
    std::size_t arm = env.fresh_arm_index();
    std::uint64_t succ = env.pull_many(arm, m);
    double phat = static_cast<double>(succ) / static_cast<double>(m);
    if (phat > best_mean) {
      best_mean = phat;
      best = arm;
    }
  }
  RunRecord rec;
  rec.chosen = best;
  rec.samples_used = env.samples_used();
  rec.arms_touched = env.arms_touched();
  rec.true_mean = env.true_mean(best);
  rec.success = rec.true_mean >= beta;
  return rec;
}

// ---------------------------------------------------------------------------
// Reductions

namespace {

struct CappedEstimate {
  double alpha_hat = 0.0;
  std::uint64_t samples = 0;
  bool clamped = false;
};

// Estimator sizes from the usual formulas, with the arm count capped so the
// stage fits into `max_samples`. log(1/delta) comes in log form; the
// schedules below use delta = exp(-10 N / ln^2 N), far beyond double range.
CappedEstimate capped_estimate(ArmSource& env, double eta1, double eta2,
                               double eps, double log_inv_delta, double c_const,
                               std::uint64_t max_samples) {
  CappedEstimate out;
  auto clamp_param = [&out](double v, double lo, double hi) {
    double c = std::clamp(v, lo, hi);
    if (c != v) out.clamped = true;
    return c;
  };
  eta1 = clamp_param(eta1, 1e-9, 0.5);
  eta2 = clamp_param(eta2, 1e-9, eta1);
  eps = clamp_param(eps, 1e-9, 0.5);

  QuantileSizes sz;
  sz.pulls_per_arm = static_cast<std::uint64_t>(
      std::ceil(c_const * std::log(1.0 / eta2) / (eps * eps)));
  sz.pulls_per_arm = std::max<std::uint64_t>(sz.pulls_per_arm, 1);
  double arms_formula = std::ceil(c_const * eta1 * log_inv_delta / (eta2 * eta2));
  std::uint64_t arm_cap = std::max<std::uint64_t>(
      1, max_samples / sz.pulls_per_arm);
  if (arms_formula > static_cast<double>(arm_cap)) {
    sz.arms = arm_cap;
    out.clamped = true;
  } else {
    sz.arms = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(arms_formula));
  }
  sz.order_index = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(
             std::ceil(static_cast<double>(sz.arms) * (eta1 - eta2 / 2.0))));
  sz.order_index = std::min(sz.order_index, sz.arms);

  QuantileEstimate est = estimate_quantile_sized(env, sz);
  out.alpha_hat = est.alpha_hat;
  out.samples = est.samples_used;
  return out;
}

RunRecord last_arm_record(BanditEnv& env, double success_target, bool degenerate) {
  RunRecord rec;
  std::size_t last = env.arms_touched() > 0 ? env.arms_touched() - 1 : 0;
  rec.chosen = last;
  rec.true_mean = env.true_mean(last);
  rec.success = rec.true_mean >= success_target;
  rec.samples_used = env.samples_used();
  rec.arms_touched = env.arms_touched();
  rec.degenerate_params = degenerate;
  return rec;
}

// Clamps (alpha_run, beta_run) into schedule validity, runs the threshold
// schedule on whatever budget remains, and scores against success_target.
RunRecord finish_with_schedule(BanditEnv& env, const ReductionParams& rp,
                               double alpha_run, double beta_run,
                               bool degenerate, double success_target,
                               ReductionStats* stats) {
  bool clamped = degenerate;
  double min_alpha = 2.0 * rp.rho + 2e-9;
  double a = alpha_run;
  double b = beta_run;
  if (a > 1.0 - 1e-9) { a = 1.0 - 1e-9; clamped = true; }
  if (a < min_alpha) { a = min_alpha; clamped = true; }
  double b_hi = a - 2.0 * rp.rho;
  if (b > b_hi) { b = b_hi; clamped = true; }
  if (b < 1e-9) { b = 1e-9; clamped = true; }

  std::uint64_t used = env.samples_used();
  std::uint64_t remaining = rp.budget > used ? rp.budget - used : 0;
  if (stats) {
    stats->alpha_run = a;
    stats->beta_run = b;
  }
  if (remaining < 2) {
    return last_arm_record(env, success_target, true);
  }
  BudgetScheduleParams sp;
  sp.budget = remaining;
  sp.rho = rp.rho;
  sp.rho1 = rp.rho1;
  sp.rho2 = rp.rho2;
  sp.alpha = a;
  sp.beta = b;
  BudgetSchedule sched(sp);
  RunRecord rec = run_fixed_budget(env, sched);
  rec.true_mean = env.true_mean(*rec.chosen);
  rec.success = rec.true_mean >= success_target;
  rec.degenerate_params = clamped;
  return rec;
}

double cube_root_log_eps(double log_n) {
  return std::pow(log_n, -1.0 / 3.0);
}

}  // namespace

std::uint64_t averaged_quantile_stages(double eps, double eta1, double eta2) {
  if (!(eta2 > 0.0 && eta2 < eta1 && eta1 < 1.0)) {
    throw std::domain_error("need 0 < eta2 < eta1 < 1");
  }
  if (!(eps > 0.0)) throw std::domain_error("eps must be positive");
  return static_cast<std::uint64_t>(std::ceil(6.0 / (eps * (eta1 - eta2))));
}

RunRecord reduce_unknown_alpha_avg(BanditEnv& env, const ReductionParams& rp,
                                   double eta1, double eta2, double eps,
                                   ReductionStats* stats) {
  const std::uint64_t j_count = averaged_quantile_stages(eps, eta1, eta2);
  env.set_budget(rp.budget);
  const double n = static_cast<double>(rp.budget);
  const double log_n = std::log(n);
  const double success_target = env.reservoir().quantile_average(eta1, eta2) - eps;
  const double step = (eta1 - eta2) / static_cast<double>(j_count);
  const double eps_prime = cube_root_log_eps(log_n);
  const double log_inv_delta =
      10.0 * n / (log_n * log_n) + std::log(static_cast<double>(j_count));
  const auto slice = static_cast<std::uint64_t>(n * rp.estimation_budget_fraction);
  const std::uint64_t per_call = std::max<std::uint64_t>(1, slice / j_count);

  bool degenerate = false;
  double alpha_sum = 0.0;
  std::uint64_t est_samples = 0;
  try {
    for (std::uint64_t j = 0; j < j_count; ++j) {
      double eta_j = ((static_cast<double>(j_count - j)) * eta1 +
                      static_cast<double>(j) * eta2) /
                     static_cast<double>(j_count);
      CappedEstimate ce = capped_estimate(env, eta_j, step, eps_prime,
                                          log_inv_delta, rp.c_const, per_call);
      degenerate = degenerate || ce.clamped;
      alpha_sum += ce.alpha_hat;
      est_samples += ce.samples;
    }
  } catch (const BudgetExhausted&) {
    if (stats) stats->estimation_truncated = true;
    return last_arm_record(env, success_target, true);
  }
  double alpha_avg = alpha_sum / static_cast<double>(j_count);
  if (stats) {
    stats->alpha_hat = alpha_avg;
    stats->estimation_samples = est_samples;
  }
  return finish_with_schedule(env, rp, alpha_avg - eps / 4.0,
                              alpha_avg - eps / 2.0, degenerate,
                              success_target, stats);
}

RunRecord reduce_alpha_above_half(BanditEnv& env, const ReductionParams& rp,
                                  double eta, double eps,
                                  ReductionStats* stats) {
  if (!(eta > 0.0 && eta <= 0.5)) throw std::domain_error("eta must lie in (0, 1/2]");
  if (!(eps > 0.0)) throw std::domain_error("eps must be positive");
  env.set_budget(rp.budget);
  const double n = static_cast<double>(rp.budget);
  const double log_n = std::log(n);
  const double success_target = env.reservoir().inverse_cdf(1.0 - eta) - eps;

  double eta2 = cube_root_log_eps(log_n);
  bool degenerate = false;
  if (eta2 >= eta) {
    eta2 = eta / 2.0;
    degenerate = true;
  }
  const double eps_prime = cube_root_log_eps(log_n);
  const double log_inv_delta = 10.0 * n / (log_n * log_n);
  const auto slice = static_cast<std::uint64_t>(n * rp.estimation_budget_fraction);

  CappedEstimate ce;
  try {
    ce = capped_estimate(env, eta, eta2, eps_prime, log_inv_delta, rp.c_const, slice);
  } catch (const BudgetExhausted&) {
    if (stats) stats->estimation_truncated = true;
    return last_arm_record(env, success_target, true);
  }
  degenerate = degenerate || ce.clamped;
  if (stats) {
    stats->alpha_hat = ce.alpha_hat;
    stats->estimation_samples = ce.samples;
  }
  double gap = eps - 2.0 * eps_prime;
  if (gap < 2.0 * rp.rho) {
    gap = 2.0 * rp.rho;  // smallest spread the schedule accepts
    degenerate = true;
  }
  return finish_with_schedule(env, rp, ce.alpha_hat, ce.alpha_hat - gap,
                              degenerate, success_target, stats);
}

RunRecord reduce_ess_sup(BanditEnv& env, const ReductionParams& rp, double eps,
                         double eps1, ReductionStats* stats) {
  if (!(eps > 0.0 && eps1 > eps)) throw std::domain_error("need eps1 > eps > 0");
  env.set_budget(rp.budget);
  const double n = static_cast<double>(rp.budget);
  const double log_n = std::log(n);
  const double success_target = env.reservoir().ess_sup() - eps1;

  double eta1 = cube_root_log_eps(log_n);
  bool degenerate = false;
  if (eta1 > 0.5) {
    eta1 = 0.5;
    degenerate = true;
  }
  const double eta2 = eta1 / 2.0;
  const double eps_prime = eps1 - eps;
  const double log_inv_delta = 10.0 * n / (log_n * log_n);
  const auto slice = static_cast<std::uint64_t>(n * rp.estimation_budget_fraction);

  CappedEstimate ce;
  try {
    ce = capped_estimate(env, eta1, eta2, eps_prime, log_inv_delta, rp.c_const, slice);
  } catch (const BudgetExhausted&) {
    if (stats) stats->estimation_truncated = true;
    return last_arm_record(env, success_target, true);
  }
  degenerate = degenerate || ce.clamped;
  if (stats) {
    stats->alpha_hat = ce.alpha_hat;
    stats->estimation_samples = ce.samples;
  }
  double gap = std::max(eps, 2.0 * rp.rho);
  if (gap != eps) degenerate = true;
  return finish_with_schedule(env, rp, ce.alpha_hat, ce.alpha_hat - gap,
                              degenerate, success_target, stats);
}

}  // namespace infexplore
