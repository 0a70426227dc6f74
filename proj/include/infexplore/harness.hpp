#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "infexplore/run_record.hpp"

// Experiment configuration, deterministic parallel trial execution, and
// results output. Per-trial seeds are derived (never sequential streams), so
// outputs are identical for any worker-pool size.

namespace infexplore::harness {

// Order-independent avalanche mix of (master seed, trial id).
std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trial_id);

enum class Mode {
  FixedConfidence,
  FixedBudget,
  ReduceAvg,
  ReduceHalf,
  ReduceEssSup,
  MultiArm,
  Adversary,
};

const char* mode_name(Mode m);

struct ExperimentConfig {
  Mode mode = Mode::FixedConfidence;
  std::string reservoir_spec = "uniform:0,1";
  std::uint64_t trials = 1;
  std::uint64_t master_seed = 0;
  std::string out_path;    // row output (CSV or JSON)
  std::string format = "csv";
  std::string trace_path;  // JSONL checkpoint trace / adversary ledger
  int threads = 0;         // 0: INFEXPLORE_THREADS env var, then hardware
  bool timing = false;     // fill the ns column (off: ns=0, outputs replayable)

  double eta = 0.1;
  double eta2 = -1.0;  // reduce-avg second quantile; default eta/2
  double eps = 0.1;
  double eps1 = -1.0;  // ess-sup outer accuracy
  double delta = 0.1;
  double alpha = -1.0;
  double beta = -1.0;
  double rho = 0.05;
  double rho1 = 0.05;
  double rho2 = 0.1;
  double c_const = 4.0;
  std::uint64_t budget = 0;
  int grid_cells = 2048;

  void validate() const;  // throws std::invalid_argument on missing params
};

struct ResultRow {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  double true_mean = std::nan("");
  std::uint64_t samples = 0;
  std::uint64_t arms = 0;
  bool success = false;
  std::uint64_t ns = 0;
};

struct TrialExtras {
  double accepted = std::nan("");      // multi-arm: arms accepted
  double bad_accepted = std::nan("");  // multi-arm: accepted with mean < beta
  double cost = std::nan("");          // adversary: ledger cost
  bool infeasible = false;
  bool degenerate = false;
};

struct WilsonInterval {
  double center = 0.0;
  double half_width = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

WilsonInterval wilson95(double phat, std::uint64_t n);

struct TrialOutputs {
  std::vector<ResultRow> rows;
  std::vector<TrialExtras> extras;
  nlohmann::json summary;
};

// Runs cfg.trials independent trials on a bounded worker pool. Rows come
// back sorted by trial id; aggregation is recomputable from them. Writes row
// output to cfg.out_path when set, trace/ledger JSONL to cfg.trace_path when
// set.
TrialOutputs run_trials(const ExperimentConfig& cfg);

std::string rows_to_csv(const std::vector<ResultRow>& rows);
nlohmann::json rows_to_json(const std::vector<ResultRow>& rows);
nlohmann::json summarize(const ExperimentConfig& cfg,
                         const std::vector<ResultRow>& rows,
                         const std::vector<TrialExtras>& extras);

}  // namespace infexplore::harness
