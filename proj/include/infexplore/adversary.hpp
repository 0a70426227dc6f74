#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "infexplore/reservoir.hpp"
#include "infexplore/run_record.hpp"

// Randomness-distorting adversary. A batch-compressed algorithm runs against
// an environment whose batch outcomes are conditioned on declared events;
// each declaration with posterior probability P costs ln(1/P) on a ledger,
// and e^{-Cost} lower-bounds the true failure probability of the algorithm.

namespace infexplore {

// floor(N^e) with a tiny relative nudge so exact integer powers do not fall
// to the neighbor below (double rounding convention, used for every regime
// boundary).
std::uint64_t power_floor(std::uint64_t n, double exponent);

// Checkpoint set with three regimes: all integers up to N^{2 rho}, multiples
// of floor(N^rho) up to N^{6 rho}, then a (1+rho)-geometric tail. Generation
// stops after the first entry past N (1 + rho). Throws std::domain_error if
// N^{2 rho} < 2.
std::vector<std::uint64_t> batch_set(std::uint64_t n, double rho);

// Slow-increase check: b_{k+1} / (b_k + 1) <= 1 + rho for consecutive entries.
bool is_slowly_increasing(const std::vector<std::uint64_t>& batches, double rho);

// ---------------------------------------------------------------------------

struct Declaration {
  enum class Kind {
    BatchMeanAtMost,   // mean of the pending batch <= value
    ThetaDropAtLeast,  // theta(phat after batch) <= theta(phat now) - value
    MeanStaysBelow,    // phat after batch <= value
    FinalArmBelow,     // output arm's hidden mean < value
  };
  Kind kind = Kind::BatchMeanAtMost;
  double value = 0.0;
  // Batch declarations resolve to "batch successes <= max_successes" given
  // the arm state they were made against; < 0 means the event is impossible.
  std::int64_t max_successes = -1;

  const char* kind_name() const;
};

Declaration declare_batch_mean_at_most(double bound, std::uint64_t batch_size);
Declaration declare_theta_drop(double decrement, std::uint64_t pulls,
                               std::uint64_t reward, std::uint64_t batch_size);
Declaration declare_mean_stays_below(double bound, std::uint64_t pulls,
                                     std::uint64_t reward, std::uint64_t batch_size);
Declaration declare_final_arm_below(double bound);

// ---------------------------------------------------------------------------

// Posterior over an arm's hidden mean on a fixed grid spanning the
// admissible support. beta and alpha are exact cell boundaries, so prior
// masses of [gamma_lo, beta) and [gamma_lo, alpha) are exact.
class PosteriorGrid {
 public:
  PosteriorGrid(const AdmissibleReservoir& prior, int min_cells);

  std::size_t size() const { return weights_.size(); }
  double point(std::size_t g) const;
  double weight(std::size_t g) const { return weights_[g]; }

  // Multiplies in a Bernoulli likelihood with the given counts, in log space.
  void update(std::uint64_t successes, std::uint64_t failures);

  double mean() const;
  double prob_below(double x) const;
  double log_prob_below(double x) const;

  // Conditions on {mean < x}; throws InfeasibleDeclaration when no mass is
  // left.
  void condition_below(double x);

  std::size_t sample_cell(std::mt19937_64& rng) const;
  double sample_value(std::mt19937_64& rng) const;

 private:
  struct Geometry {
    std::vector<double> lo, hi, mid;
  };
  std::shared_ptr<const Geometry> geom_;
  std::vector<double> log_weights_;  // normalized: logsumexp == 0
  std::vector<double> weights_;

  void renormalize();
};

// P_t of a declaration under the posterior: mixture over the grid of exact
// binomial CDFs for batch events, posterior mass for FinalArmBelow.
double declaration_probability(const PosteriorGrid& post,
                               std::uint64_t batch_size, const Declaration& d);

// Draws a batch reward sequence from the joint (mean, batch) posterior
// predictive conditioned on the declaration: rejection sampling with a
// 10^6-retry cap, falling back to exact conditional enumeration for
// batch_size <= 20, SamplingStalled otherwise.
std::vector<std::uint8_t> sample_conditioned(const PosteriorGrid& post,
                                             std::uint64_t batch_size,
                                             const Declaration& d,
                                             std::mt19937_64& rng);

// ---------------------------------------------------------------------------

struct LedgerEntry {
  std::uint64_t t = 0;  // total outer samples when declared
  std::size_t arm = 0;
  Declaration declaration;
  double probability = 0.0;      // may underflow to 0 for display
  double log_probability = 0.0;  // exact
  double cum_cost = 0.0;         // running sum of -log P
};

struct CostLedger {
  std::vector<LedgerEntry> entries;
  bool aborted = false;
  std::string abort_reason;

  double total_cost() const {
    return entries.empty() ? 0.0 : entries.back().cum_cost;
  }
  void add(std::uint64_t t, std::size_t arm, const Declaration& d, double log_p);
  std::string to_jsonl() const;
};

// ---------------------------------------------------------------------------

// Outcome-identical batch-compression wrapper: forwards pulls so the inner
// environment's per-arm counts always land on the checkpoint set, while the
// algorithm sees exactly the rewards it asked for. Sample inflation per arm
// is at most (1 + rho) when the set is rho-slowly increasing, so the wrapped
// environment's budget should carry that headroom.
class BatchCompressedEnv : public ArmSource {
 public:
  BatchCompressedEnv(ArmSource& inner, std::vector<std::uint64_t> batches);

  std::uint64_t pull_many(std::size_t i, std::uint64_t count) override;
  std::uint64_t successes_in_range(std::size_t i, std::uint64_t a,
                                   std::uint64_t b) const override;
  std::uint64_t pulls(std::size_t i) const override;
  std::uint64_t successes(std::size_t i) const override;
  std::uint64_t samples_used() const override { return inner_total_; }
  std::optional<std::uint64_t> budget() const override { return inner_.budget(); }
  std::size_t arms_touched() const override { return inner_.arms_touched(); }

  std::uint64_t outer_samples() const { return inner_.samples_used(); }
  double inflation() const {
    return inner_total_ == 0
               ? 1.0
               : static_cast<double>(outer_samples()) / static_cast<double>(inner_total_);
  }

 private:
  ArmSource& inner_;
  std::vector<std::uint64_t> batches_;
  std::vector<std::uint64_t> view_pulls_;
  std::vector<std::uint64_t> view_succ_;
  std::uint64_t inner_total_ = 0;
};

// ---------------------------------------------------------------------------

// Environment that batch-compresses the algorithm onto batch_set(N, rho) and
// imposes the declaration schedule: silent while an arm has at most N^{2 rho}
// pulls; batch means pushed below gamma_hi - N^{-rho} through N^{6 rho}; then
// theta drops of rho (1 + 10 rho) d_F(alpha,beta) / ln N per batch while the
// arm's mean sits above beta, and stays-below declarations once it does not.
class AdversarialEnv : public ArmSource {
 public:
  AdversarialEnv(AdmissibleReservoir prior, std::uint64_t n, double rho,
                 std::uint64_t seed, int grid_cells = 2048);

  std::uint64_t pull_many(std::size_t i, std::uint64_t count) override;
  std::uint64_t successes_in_range(std::size_t i, std::uint64_t a,
                                   std::uint64_t b) const override;
  std::uint64_t pulls(std::size_t i) const override;
  std::uint64_t successes(std::size_t i) const override;
  std::uint64_t samples_used() const override { return inner_used_; }
  std::optional<std::uint64_t> budget() const override { return n_; }
  std::size_t arms_touched() const override { return arms_.size(); }

  // Step taken when the algorithm commits to an output arm: declares the
  // arm's hidden mean below beta and conditions its posterior accordingly.
  void declare_final(std::size_t i);

  // Hidden mean of the output arm drawn from its conditioned posterior.
  double sample_final_mean(std::size_t i);

  const CostLedger& ledger() const { return ledger_; }
  CostLedger& ledger() { return ledger_; }
  std::uint64_t outer_samples() const { return outer_used_; }
  const std::vector<std::uint64_t>& batches() const { return batches_; }

 private:
  struct Arm {
    std::vector<std::uint8_t> rewards;  // outer reward bits
    std::uint64_t outer = 0;
    std::uint64_t reward_total = 0;
    std::uint64_t inner = 0;
    std::uint64_t inner_succ = 0;
    std::unique_ptr<PosteriorGrid> grid;
    bool finalized = false;
  };

  void ensure_arm(std::size_t i);
  PosteriorGrid& grid(std::size_t i);
  void advance_one_batch(std::size_t i, std::uint64_t target);

  AdmissibleReservoir prior_;
  std::uint64_t n_;
  double rho_;
  int grid_cells_;
  std::uint64_t n2_, n6_, batch_unit_;
  double step2_bound_;
  double theta_decrement_;
  std::vector<std::uint64_t> batches_;
  std::vector<Arm> arms_;
  std::uint64_t inner_used_ = 0;
  std::uint64_t outer_used_ = 0;
  CostLedger ledger_;
  PosteriorGrid prior_grid_;
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------

struct AdversarialOutcome {
  RunRecord record;
  CostLedger ledger;
  bool infeasible = false;
};

// Runs `algorithm` against the adversary on the admissible reservoir built
// from (alpha, beta, eta, rho). The returned record's arm always has mean
// below beta under the conditioned measure. If a declaration turns out
// impossible the run aborts with the partial ledger and infeasible = true.
AdversarialOutcome run_adversarial(
    const std::function<RunRecord(ArmSource&)>& algorithm, std::uint64_t n,
    double rho, double alpha, double beta, double eta, std::uint64_t seed,
    int grid_cells = 2048);

struct StrengthReport {
  double cost = 0.0;
  double reference_envelope = 0.0;  // (c_{alpha,beta} + c_fit * rho) N / ln^2 N
  double c_fit = 0.0;               // reported fit, not asserted
  double implied_floor = 0.0;       // e^{-cost}
  double log_implied_floor = 0.0;   // -cost
};

StrengthReport strength_report(double alpha, double beta, double rho,
                               std::uint64_t n, const CostLedger& ledger);

}  // namespace infexplore
