#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "infexplore/fixed_confidence.hpp"
#include "infexplore/harness.hpp"
#include "infexplore/reservoir.hpp"

using namespace infexplore;

namespace {
std::uint64_t trial_seed(std::uint64_t t) { return harness::derive_seed(404, t); }
}  // namespace

TEST_CASE("estimator sizes from the formulas") {
  // eta1=0.1, eta2=0.05, eps=0.3, delta=0.2, C=4
  auto sz = quantile_sizes(0.1, 0.05, 0.3, std::log(1.0 / 0.2), 4.0);
  CHECK(sz.arms == 258);
  CHECK(sz.pulls_per_arm == 134);
  CHECK(sz.order_index == 20);
  CHECK_THROWS_AS(quantile_sizes(0.05, 0.1, 0.3, 1.0, 4.0), std::domain_error);
}

TEST_CASE("estimate_quantile uses exactly K*n samples") {
  BanditEnv env(Reservoir::uniform(0, 1), 1);
  auto est = estimate_quantile(env, 0.1, 0.05, 0.3, 0.2, 4.0);
  CHECK(est.samples_used == 258ull * 134ull);
  CHECK(env.samples_used() == est.samples_used);
  CHECK(env.arms_touched() == 258);
  CHECK(est.alpha_hat >= 0.0);
  CHECK(est.alpha_hat <= 1.0);
}

TEST_CASE("estimate concentrates on a single-atom reservoir") {
  // eps = 0.3: |alpha_hat - 0.7| <= eps/3 in at least 99% of 1000 trials
  Reservoir res = Reservoir::atoms({{0.7, 1.0}});
  int ok = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    BanditEnv env(res, trial_seed(t));
    auto est = estimate_quantile(env, 0.1, 0.05, 0.3, 0.2, 4.0);
    if (std::abs(est.alpha_hat - 0.7) <= 0.1) ++ok;
  }
  CHECK(ok >= 990);
}

TEST_CASE("estimate lands in the guarantee window on uniform") {
  int ok = 0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    BanditEnv env(Reservoir::uniform(0, 1), trial_seed(t));
    auto est = estimate_quantile(env, 0.1, 0.05, 0.3, 0.2, 4.0);
    if (est.alpha_hat >= 0.8 && est.alpha_hat <= 1.0) ++ok;
  }
  CHECK(ok >= 1800);  // >= 90%
}

TEST_CASE("accept loop immediately takes a perfect arm") {
  BanditEnv env(Reservoir::atoms({{1.0, 1.0}}), 3);
  auto got = accept_loop(env, 0.1, 0.1, 0.1, 0.9, 4.0);
  REQUIRE(got.has_value());
  CHECK(*got == 0);
  CHECK(env.pulls(0) == accept_loop_pulls_per_arm(0.1, 0.1, 0.1, 4.0));
}

TEST_CASE("accept loop declares failure on an all-zero reservoir") {
  BanditEnv env(Reservoir::atoms({{0.0, 1.0}}), 3);
  auto got = accept_loop(env, 0.1, 0.1, 0.1, 0.9, 4.0);
  CHECK(!got.has_value());
  // the hard cap on arms tried
  CHECK(env.arms_touched() == accept_loop_arm_cap(0.1, 0.1, 4.0));
  // every tried arm received the full per-arm allowance
  for (std::size_t i = 0; i < env.arms_touched(); ++i) {
    CHECK(env.pulls(i) == accept_loop_pulls_per_arm(0.1, 0.1, 0.1, 4.0));
  }
}

TEST_CASE("accepted bad arms are rare") {
  // uniform reservoir, alpha_hat pinned at 0.9: among accepted arms, those
  // with true mean < 0.8 occur at rate well under delta = 0.1
  int accepted = 0, bad = 0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    BanditEnv env(Reservoir::uniform(0, 1), trial_seed(t));
    auto got = accept_loop(env, 0.1, 0.1, 0.1, 0.9, 4.0);
    if (got) {
      ++accepted;
      if (env.true_mean(*got) < 0.8) ++bad;
    }
  }
  CHECK(accepted > 1900);
  CHECK(static_cast<double>(bad) <= 0.1 * accepted);
}

TEST_CASE("solve: two-atom reservoir meets the PAC bar") {
  Reservoir res = Reservoir::atoms({{0.9, 0.2}, {0.1, 0.8}});
  ConfidenceParams p{0.1, 0.1, 0.1, 4.0};
  int ok = 0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    BanditEnv env(res, trial_seed(t));
    RunRecord rec = solve_fixed_confidence(env, p);
    if (rec.success) ++ok;
  }
  CHECK(ok >= 1800);  // target is mean >= 0.8; spec asks >= 0.9 success
}

TEST_CASE("solve: degenerate reservoir always succeeds when an arm is output") {
  Reservoir res = Reservoir::atoms({{0.5, 1.0}});
  ConfidenceParams p{0.2, 0.1, 0.1, 4.0};
  for (std::uint64_t t = 0; t < 50; ++t) {
    BanditEnv env(res, trial_seed(t));
    RunRecord rec = solve_fixed_confidence(env, p);
    if (rec.chosen) CHECK(rec.success);
  }
}

TEST_CASE("mean samples scale like log(1/delta), not its square") {
  ConfidenceParams loose{0.1, 0.1, 0.5, 4.0};
  ConfidenceParams tight{0.1, 0.1, 0.05, 4.0};
  double sum_loose = 0.0, sum_tight = 0.0;
  for (std::uint64_t t = 0; t < 500; ++t) {
    BanditEnv e1(Reservoir::uniform(0, 1), trial_seed(t));
    sum_loose += static_cast<double>(solve_fixed_confidence(e1, loose).samples_used);
    BanditEnv e2(Reservoir::uniform(0, 1), trial_seed(t));
    sum_tight += static_cast<double>(solve_fixed_confidence(e2, tight).samples_used);
  }
  double ratio = sum_tight / sum_loose;
  CHECK(ratio >= 1.5);
  CHECK(ratio <= 6.0);
}

TEST_CASE("parameter validation") {
  ConfidenceParams bad{0.6, 0.1, 0.1, 4.0};
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  BanditEnv env(Reservoir::uniform(0, 1), 1);
  CHECK_THROWS_AS(accept_loop(env, 0.1, 0.1, 0.1, 1.5, 4.0), std::domain_error);
  CHECK_THROWS_AS(estimate_quantile(env, 0.1, 0.05, 0.3, 0.7, 4.0), std::domain_error);
}

TEST_CASE("PAC failure rate within 3 Wilson widths for three reservoirs") {
  std::vector<Reservoir> reservoirs;
  reservoirs.push_back(Reservoir::uniform(0, 1));
  reservoirs.push_back(Reservoir::atoms({{0.9, 0.2}, {0.1, 0.8}}));
  reservoirs.push_back(admissible_reservoir(0.6, 0.4, 0.3, 0.1));
  ConfidenceParams p{0.1, 0.1, 0.1, 4.0};
  for (const auto& res : reservoirs) {
    const std::uint64_t trials = 2000;
    std::uint64_t fails = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      BanditEnv env(res, trial_seed(t));
      if (!solve_fixed_confidence(env, p).success) ++fails;
    }
    double rate = static_cast<double>(fails) / trials;
    auto w = harness::wilson95(rate, trials);
    CHECK(rate <= p.delta + 3.0 * w.half_width);
  }
}
