// CLI simulator: pure-exploration runs over reservoir-distributed arms, with
// deterministic seeded Monte Carlo trials and CSV/JSON results.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "infexplore/harness.hpp"
#include "infexplore/kernels.hpp"

namespace {

using infexplore::harness::ExperimentConfig;
using infexplore::harness::Mode;

void add_common_options(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--reservoir", cfg.reservoir_spec,
                  "uniform:LO,HI | atoms:V@W,... | "
                  "admissible:alpha=A,beta=B,eta=E,rho=R");
  sub->add_option("--eta", cfg.eta, "quantile level");
  sub->add_option("--eta2", cfg.eta2, "second quantile level (reduce-avg)");
  sub->add_option("--eps", cfg.eps, "accuracy");
  sub->add_option("--eps1", cfg.eps1, "outer accuracy (reduce-esssup)");
  sub->add_option("--delta", cfg.delta, "failure probability");
  sub->add_option("--alpha", cfg.alpha, "target quantile value");
  sub->add_option("--beta", cfg.beta, "acceptance floor");
  sub->add_option("--budget", cfg.budget, "sample budget N");
  sub->add_option("--rho", cfg.rho, "batch growth");
  sub->add_option("--rho1", cfg.rho1, "initial-block scale");
  sub->add_option("--rho2", cfg.rho2, "threshold slack");
  sub->add_option("--c-const", cfg.c_const, "constant multiplier");
  sub->add_option("--trials", cfg.trials, "number of trials");
  sub->add_option("--seed", cfg.master_seed, "master seed");
  sub->add_option("--out", cfg.out_path, "row output path");
  sub->add_option("--format", cfg.format, "row format: csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--trace", cfg.trace_path,
                  "JSONL checkpoint trace / adversary ledger path");
  sub->add_option("--threads", cfg.threads,
                  "worker pool size (0: INFEXPLORE_THREADS, then hardware)");
  sub->add_option("--grid", cfg.grid_cells, "posterior grid cells (adversary)");
  sub->add_flag("--timing", cfg.timing,
                "fill the ns column (off by default so reruns are byte-identical)");
}

int run_mode(const ExperimentConfig& cfg) {
  auto out = infexplore::harness::run_trials(cfg);
  std::cout << out.summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"infexplore: pure exploration over infinitely many arms"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  struct ModeSub {
    const char* name;
    const char* help;
    Mode mode;
  };
  const std::vector<ModeSub> subs = {
      {"fixed-confidence", "quantile estimate + accept loop", Mode::FixedConfidence},
      {"fixed-budget", "moving-threshold schedule under a hard budget", Mode::FixedBudget},
      {"reduce-avg", "averaged-quantile target, then fixed budget", Mode::ReduceAvg},
      {"reduce-half", "above-half target, then fixed budget", Mode::ReduceHalf},
      {"reduce-esssup", "essential-supremum target, then fixed budget", Mode::ReduceEssSup},
      {"multi-arm", "fixed budget accepting every surviving arm", Mode::MultiArm},
      {"adversary", "distortion adversary with cost ledger", Mode::Adversary},
  };

  std::vector<ExperimentConfig> cfgs(subs.size());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    CLI::App* sub = app.add_subcommand(subs[i].name, subs[i].help);
    cfgs[i].mode = subs[i].mode;
    add_common_options(sub, cfgs[i]);
  }

  // Sweep: rerun one mode over a grid of budgets or deltas, one summary row
  // per value.
  ExperimentConfig sweep_cfg;
  std::string sweep_param = "budget";
  std::string sweep_mode = "fixed-budget";
  std::vector<double> sweep_values;
  CLI::App* sweep = app.add_subcommand("sweep", "grid over budget or delta");
  add_common_options(sweep, sweep_cfg);
  sweep->add_option("--mode", sweep_mode, "mode to sweep")
      ->check(CLI::IsMember({"fixed-confidence", "fixed-budget", "reduce-avg",
                             "reduce-half", "reduce-esssup", "multi-arm",
                             "adversary"}));
  sweep->add_option("--param", sweep_param, "parameter to vary: budget | delta")
      ->check(CLI::IsMember({"budget", "delta"}));
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required()
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (app.got_subcommand(subs[i].name)) return run_mode(cfgs[i]);
    }
    // sweep
    for (const ModeSub& ms : subs) {
      if (sweep_mode == ms.name) sweep_cfg.mode = ms.mode;
    }
    std::string rows_csv = "param,value,failure_rate,wilson95_half_width,"
                           "mean_samples,mean_arms\n";
    for (double v : sweep_values) {
      ExperimentConfig cfg = sweep_cfg;
      cfg.out_path.clear();  // per-value rows are not written in sweep mode
      if (sweep_param == "budget") {
        cfg.budget = static_cast<std::uint64_t>(v);
      } else {
        cfg.delta = v;
      }
      auto out = infexplore::harness::run_trials(cfg);
      out.summary["sweep_param"] = sweep_param;
      out.summary["sweep_value"] = v;
      std::cout << out.summary.dump() << "\n";
      char buf[256];
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    sweep_param.c_str(), v,
                    out.summary["failure_rate"].get<double>(),
                    out.summary["wilson95_half_width"].get<double>(),
                    out.summary["mean_samples"].get<double>(),
                    out.summary["mean_arms"].get<double>());
      rows_csv += buf;
    }
    if (!sweep_cfg.out_path.empty()) {
      std::ofstream f(sweep_cfg.out_path);
      if (!f) throw std::runtime_error("cannot write: " + sweep_cfg.out_path);
      f << rows_csv;
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
