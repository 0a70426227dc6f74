#include "infexplore/fixed_confidence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace infexplore {

namespace {

void check_unit_half(double v, const char* name) {
  if (!(v > 0.0 && v <= 0.5)) {
    throw std::domain_error(std::string(name) + " must lie in (0, 1/2]");
  }
}

std::uint64_t ceil_to_count(double x) {
  if (x <= 1.0) return 1;
  if (x >= 9.2e18) throw std::domain_error("derived sample count overflows");
  return static_cast<std::uint64_t>(std::ceil(x));
}

}  // namespace

void ConfidenceParams::validate() const {
  check_unit_half(eta, "eta");
  check_unit_half(eps, "eps");
  check_unit_half(delta, "delta");
  if (!(c_const >= 1.0)) throw std::domain_error("c_const must be >= 1");
}

QuantileSizes quantile_sizes(double eta1, double eta2, double eps,
                             double log_inv_delta, double c_const) {
  if (eta2 > eta1) throw std::domain_error("eta2 must be <= eta1");
  QuantileSizes sz;
  sz.arms = ceil_to_count(c_const * eta1 * log_inv_delta / (eta2 * eta2));
  sz.pulls_per_arm = ceil_to_count(c_const * std::log(1.0 / eta2) / (eps * eps));
  sz.order_index = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(
             std::ceil(static_cast<double>(sz.arms) * (eta1 - eta2 / 2.0))));
  sz.order_index = std::min(sz.order_index, sz.arms);
  return sz;
}

QuantileEstimate estimate_quantile_sized(ArmSource& env, const QuantileSizes& sz) {
  std::vector<double> means;
  means.reserve(sz.arms);
  for (std::uint64_t j = 0; j < sz.arms; ++j) {
    std::size_t arm = env.fresh_arm_index();
    std::uint64_t succ = env.pull_many(arm, sz.pulls_per_arm);
    means.push_back(static_cast<double>(succ) /
                    static_cast<double>(sz.pulls_per_arm));
  }
  // k-th largest; ties broken by the descending sort order.
  std::nth_element(means.begin(), means.begin() + (sz.order_index - 1),
                   means.end(), std::greater<double>());
  QuantileEstimate est;
  est.alpha_hat = means[sz.order_index - 1];
  est.sizes = sz;
  est.samples_used = sz.arms * sz.pulls_per_arm;
  return est;
}

QuantileEstimate estimate_quantile(ArmSource& env, double eta1, double eta2,
                                   double eps, double delta, double c_const) {
  check_unit_half(eta1, "eta1");
  check_unit_half(eta2, "eta2");
  check_unit_half(eps, "eps");
  check_unit_half(delta, "delta");
  return estimate_quantile_sized(
      env, quantile_sizes(eta1, eta2, eps, std::log(1.0 / delta), c_const));
}

std::uint64_t accept_loop_arm_cap(double eta, double delta, double c_const) {
  return ceil_to_count(c_const * std::log(1.0 / delta) / eta);
}

std::uint64_t accept_loop_pulls_per_arm(double eta, double eps, double delta,
                                        double c_const) {
  return ceil_to_count(c_const * std::log(1.0 / (eta * delta)) / (eps * eps));
}

std::optional<std::size_t> accept_loop(ArmSource& env, double eta, double eps,
                                       double delta, double alpha_hat,
                                       double c_const) {
  if (!(alpha_hat >= 0.0 && alpha_hat <= 1.0)) {
    throw std::domain_error("alpha_hat must lie in [0,1]");
  }
  const std::uint64_t arm_cap = accept_loop_arm_cap(eta, delta, c_const);
  const std::uint64_t n2 = accept_loop_pulls_per_arm(eta, eps, delta, c_const);
  for (std::uint64_t tried = 0; tried < arm_cap; ++tried) {
    std::size_t arm = env.fresh_arm_index();
    std::uint64_t succ = env.pull_many(arm, n2);
    double phat = static_cast<double>(succ) / static_cast<double>(n2);
    if (phat >= alpha_hat - eps / 3.0) return arm;
  }
  return std::nullopt;
}

RunRecord solve_fixed_confidence(BanditEnv& env, const ConfidenceParams& params) {
  params.validate();
  QuantileEstimate est = estimate_quantile(env, params.eta, params.eta / 2.0,
                                           params.eps, params.delta, params.c_const);
  std::optional<std::size_t> chosen =
      accept_loop(env, params.eta, params.eps, params.delta, est.alpha_hat,
                  params.c_const);
  RunRecord rec;
  rec.chosen = chosen;
  rec.samples_used = env.samples_used();
  rec.arms_touched = env.arms_touched();
  if (chosen) {
    rec.true_mean = env.true_mean(*chosen);
    double target = env.reservoir().inverse_cdf(1.0 - params.eta) - params.eps;
    rec.success = rec.true_mean >= target;
  }
  return rec;
}

}  // namespace infexplore
