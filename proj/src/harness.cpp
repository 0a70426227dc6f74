#include "infexplore/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "infexplore/adversary.hpp"
#include "infexplore/fisher.hpp"
#include "infexplore/fixed_budget.hpp"
#include "infexplore/fixed_confidence.hpp"
#include "infexplore/kernels.hpp"
#include "infexplore/reservoir.hpp"

namespace infexplore::harness {

std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trial_id) {
  using kernels::fmix64;
  using kernels::kGolden;
  return fmix64(master_seed ^ fmix64(trial_id * kGolden + 0x7f4a7c15ULL));
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::FixedConfidence: return "fixed-confidence";
    case Mode::FixedBudget: return "fixed-budget";
    case Mode::ReduceAvg: return "reduce-avg";
    case Mode::ReduceHalf: return "reduce-half";
    case Mode::ReduceEssSup: return "reduce-esssup";
    case Mode::MultiArm: return "multi-arm";
    case Mode::Adversary: return "adversary";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  parse_reservoir(reservoir_spec);  // surfaces parse errors early
  auto need_budget = [this] {
    if (budget == 0) {
      throw std::invalid_argument(std::string(mode_name(mode)) +
                                  " requires --budget");
    }
  };
  auto need_alpha_beta = [this] {
    if (alpha < 0.0 || beta < 0.0) {
      throw std::invalid_argument(std::string(mode_name(mode)) +
                                  " requires --alpha and --beta");
    }
  };
  switch (mode) {
    case Mode::FixedConfidence:
      break;
    case Mode::FixedBudget:
    case Mode::MultiArm:
      need_budget();
      need_alpha_beta();
      break;
    case Mode::ReduceAvg:
    case Mode::ReduceHalf:
      need_budget();
      break;
    case Mode::ReduceEssSup:
      need_budget();
      if (eps1 <= eps) {
        throw std::invalid_argument("reduce-esssup requires --eps1 > --eps");
      }
      break;
    case Mode::Adversary:
      need_budget();
      need_alpha_beta();
      break;
  }
}

WilsonInterval wilson95(double phat, std::uint64_t n) {
  WilsonInterval w;
  if (n == 0) return w;
  const double z = 1.959963984540054;
  double nn = static_cast<double>(n);
  double z2n = z * z / nn;
  w.center = (phat + z2n / 2.0) / (1.0 + z2n);
  w.half_width = z * std::sqrt(phat * (1.0 - phat) / nn + z2n / (4.0 * nn)) /
                 (1.0 + z2n);
  w.lo = std::max(0.0, w.center - w.half_width);
  w.hi = std::min(1.0, w.center + w.half_width);
  return w;
}

namespace {

int resolve_threads(const ExperimentConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("INFEXPLORE_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

BudgetScheduleParams schedule_params(const ExperimentConfig& cfg) {
  BudgetScheduleParams sp;
  sp.budget = cfg.budget;
  sp.rho = cfg.rho;
  sp.rho1 = cfg.rho1;
  sp.rho2 = cfg.rho2;
  sp.alpha = cfg.alpha;
  sp.beta = cfg.beta;
  return sp;
}

ReductionParams reduction_params(const ExperimentConfig& cfg) {
  ReductionParams rp;
  rp.budget = cfg.budget;
  rp.rho = cfg.rho;
  rp.rho1 = cfg.rho1;
  rp.rho2 = cfg.rho2;
  rp.c_const = cfg.c_const;
  return rp;
}

struct TraceCollector {
  std::mutex mu;
  std::vector<std::pair<std::uint64_t, std::string>> chunks;  // trial -> jsonl

  void add(std::uint64_t trial, std::string text) {
    std::scoped_lock lock(mu);
    chunks.emplace_back(trial, std::move(text));
  }
  void write_sorted(const std::string& path) {
    std::sort(chunks.begin(), chunks.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    for (auto& [trial, text] : chunks) out << text;
  }
};

std::string trace_event_jsonl(std::uint64_t trial, const TraceEvent& ev) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"trial\":%llu,\"arm\":%zu,\"checkpoint\":%zu,\"n\":%llu,"
                "\"phat\":%.17g,\"threshold\":%.17g,\"phase\":%d,"
                "\"decision\":\"%s\"}\n",
                static_cast<unsigned long long>(trial), ev.arm, ev.checkpoint,
                static_cast<unsigned long long>(ev.pulls), ev.phat,
                ev.threshold, ev.phase, ev.rejected ? "reject" : "keep");
  return buf;
}

std::string ledger_jsonl(std::uint64_t trial, const CostLedger& ledger) {
  std::ostringstream out;
  char buf[512];
  for (const LedgerEntry& e : ledger.entries) {
    std::snprintf(buf, sizeof buf,
                  "{\"trial\":%llu,\"t\":%llu,\"arm\":%zu,\"declaration\":"
                  "{\"kind\":\"%s\",\"value\":%.17g},\"P_t\":%.17g,"
                  "\"log_P_t\":%.17g,\"cum_cost\":%.17g}\n",
                  static_cast<unsigned long long>(trial),
                  static_cast<unsigned long long>(e.t), e.arm,
                  e.declaration.kind_name(), e.declaration.value,
                  e.probability, e.log_probability, e.cum_cost);
    out << buf;
  }
  return out.str();
}

struct TrialResult {
  ResultRow row;
  TrialExtras extras;
};

TrialResult run_one(const ExperimentConfig& cfg, const Reservoir& reservoir,
                    std::uint64_t trial, TraceCollector* trace) {
  TrialResult out;
  out.row.trial = trial;
  out.row.seed = derive_seed(cfg.master_seed, trial);
  auto t0 = std::chrono::steady_clock::now();

  switch (cfg.mode) {
    case Mode::FixedConfidence: {
      BanditEnv env(reservoir, out.row.seed);
      ConfidenceParams p{cfg.eta, cfg.eps, cfg.delta, cfg.c_const};
      RunRecord rec = solve_fixed_confidence(env, p);
      out.row.true_mean = rec.true_mean;
      out.row.samples = rec.samples_used;
      out.row.arms = rec.arms_touched;
      out.row.success = rec.success;
      break;
    }
    case Mode::FixedBudget: {
      BanditEnv env(reservoir, out.row.seed, cfg.budget);
      BudgetSchedule sched(schedule_params(cfg));
      TraceFn fn;
      std::string chunk;
      if (trace) {
        fn = [&](const TraceEvent& ev) { chunk += trace_event_jsonl(trial, ev); };
      }
      RunRecord rec = run_fixed_budget_scored(env, sched, fn);
      if (trace) trace->add(trial, std::move(chunk));
      out.row.true_mean = rec.true_mean;
      out.row.samples = rec.samples_used;
      out.row.arms = rec.arms_touched;
      out.row.success = rec.success;
      break;
    }
    case Mode::ReduceAvg:
    case Mode::ReduceHalf:
    case Mode::ReduceEssSup: {
      BanditEnv env(reservoir, out.row.seed, cfg.budget);
      RunRecord rec;
      if (cfg.mode == Mode::ReduceAvg) {
        double eta2 = cfg.eta2 > 0.0 ? cfg.eta2 : cfg.eta / 2.0;
        rec = reduce_unknown_alpha_avg(env, reduction_params(cfg), cfg.eta, eta2,
                                       cfg.eps);
      } else if (cfg.mode == Mode::ReduceHalf) {
        rec = reduce_alpha_above_half(env, reduction_params(cfg), cfg.eta, cfg.eps);
      } else {
        rec = reduce_ess_sup(env, reduction_params(cfg), cfg.eps, cfg.eps1);
      }
      out.row.true_mean = rec.true_mean;
      out.row.samples = rec.samples_used;
      out.row.arms = rec.arms_touched;
      out.row.success = rec.success;
      out.extras.degenerate = rec.degenerate_params;
      break;
    }
    case Mode::MultiArm: {
      MultiArmSizes ms = multi_arm_sizes(cfg.budget);
      BanditEnv env(reservoir, out.row.seed, ms.total_budget);
      BudgetSchedule sched(schedule_params(cfg));
      MultiArmResult res = run_multi_arm_scored(env, sched);
      out.row.samples = res.samples_used;
      out.row.arms = res.arms_touched;
      out.row.success = res.success;
      double worst = std::nan("");
      std::uint64_t bad = 0;
      for (double m : res.accepted_means) {
        if (std::isnan(worst) || m < worst) worst = m;
        if (m < cfg.beta) ++bad;
      }
      out.row.true_mean = worst;
      out.extras.accepted = static_cast<double>(res.accepted.size());
      out.extras.bad_accepted = static_cast<double>(bad);
      break;
    }
    case Mode::Adversary: {
      BudgetScheduleParams sp = schedule_params(cfg);
      // The distortion rho drives the batch set and declaration sizes; the
      // wrapped schedule keeps its own feasible growth rate.
      sp.rho = std::min(cfg.rho, (cfg.alpha - cfg.beta) / 2.0);
      auto algorithm = [&sp](ArmSource& env) {
        BudgetSchedule sched(sp);
        return run_fixed_budget(env, sched);
      };
      AdversarialOutcome adv =
          run_adversarial(algorithm, cfg.budget, cfg.rho, cfg.alpha, cfg.beta,
                          cfg.eta, out.row.seed, cfg.grid_cells);
      out.row.true_mean = adv.record.true_mean;
      out.row.samples = adv.record.samples_used;
      out.row.arms = adv.record.arms_touched;
      out.row.success = adv.record.success;
      out.extras.cost = adv.ledger.total_cost();
      out.extras.infeasible = adv.infeasible;
      if (trace) trace->add(trial, ledger_jsonl(trial, adv.ledger));
      break;
    }
  }

  if (cfg.timing) {
    auto dt = std::chrono::steady_clock::now() - t0;
    out.row.ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(dt).count());
  }
  return out;
}

}  // namespace

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "trial,seed,true_mean,samples,arms,success,ns\n";
  char buf[192];
  for (const ResultRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%llu,%llu,%.17g,%llu,%llu,%d,%llu\n",
                  static_cast<unsigned long long>(r.trial),
                  static_cast<unsigned long long>(r.seed), r.true_mean,
                  static_cast<unsigned long long>(r.samples),
                  static_cast<unsigned long long>(r.arms), r.success ? 1 : 0,
                  static_cast<unsigned long long>(r.ns));
    out << buf;
  }
  return out.str();
}

nlohmann::json rows_to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    arr.push_back({{"trial", r.trial},
                   {"seed", r.seed},
                   {"true_mean", r.true_mean},
                   {"samples", r.samples},
                   {"arms", r.arms},
                   {"success", r.success},
                   {"ns", r.ns}});
  }
  return arr;
}

nlohmann::json summarize(const ExperimentConfig& cfg,
                         const std::vector<ResultRow>& rows,
                         const std::vector<TrialExtras>& extras) {
  std::uint64_t n = rows.size();
  std::uint64_t successes = 0;
  double sum_samples = 0.0, sum_sq = 0.0, sum_arms = 0.0;
  for (const ResultRow& r : rows) {
    successes += r.success ? 1 : 0;
    sum_samples += static_cast<double>(r.samples);
    sum_sq += static_cast<double>(r.samples) * static_cast<double>(r.samples);
    sum_arms += static_cast<double>(r.arms);
  }
  double nn = static_cast<double>(n);
  double fail_rate = n == 0 ? 0.0 : 1.0 - static_cast<double>(successes) / nn;
  WilsonInterval w = wilson95(fail_rate, n);
  double mean_samples = n == 0 ? 0.0 : sum_samples / nn;
  double var = n == 0 ? 0.0 : std::max(0.0, sum_sq / nn - mean_samples * mean_samples);

  // Adversary mode builds its own two-level prior; report that, not the
  // (ignored) reservoir string.
  std::string reservoir = cfg.reservoir_spec;
  if (cfg.mode == Mode::Adversary) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "admissible:alpha=%g,beta=%g,eta=%g,rho=%g",
                  cfg.alpha, cfg.beta, cfg.eta, cfg.rho);
    reservoir = buf;
  }
  nlohmann::json s{
      {"mode", mode_name(cfg.mode)},
      {"reservoir", reservoir},
      {"trials", n},
      {"master_seed", cfg.master_seed},
      {"failure_rate", fail_rate},
      {"success_rate", 1.0 - fail_rate},
      {"wilson95_half_width", w.half_width},
      {"wilson95_lo", w.lo},
      {"wilson95_hi", w.hi},
      {"mean_samples", mean_samples},
      {"stddev_samples", std::sqrt(var)},
      {"mean_arms", n == 0 ? 0.0 : sum_arms / nn},
  };

  std::uint64_t degenerate = 0, infeasible = 0;
  for (const TrialExtras& e : extras) {
    degenerate += e.degenerate ? 1 : 0;
    infeasible += e.infeasible ? 1 : 0;
  }
  if (degenerate) s["degenerate_trials"] = degenerate;

  if (cfg.mode == Mode::FixedBudget || cfg.mode == Mode::ReduceAvg ||
      cfg.mode == Mode::ReduceHalf || cfg.mode == Mode::ReduceEssSup) {
    double log_n = std::log(static_cast<double>(cfg.budget));
    // Continuity-correct an all-success (or all-failure) batch so the
    // diagnostic stays finite.
    double floor_rate = 0.5 / (nn + 1.0);
    double d = std::clamp(fail_rate, floor_rate, 1.0 - floor_rate);
    s["rate_diagnostic"] = -std::log(d) * log_n * log_n / static_cast<double>(cfg.budget);
    if (cfg.alpha > 0.0 && cfg.beta > 0.0) {
      s["rate_constant"] = fisher::rate_constant(cfg.alpha, cfg.beta);
    }
  }
  if (cfg.mode == Mode::MultiArm) {
    double acc = 0.0, bad = 0.0;
    for (const TrialExtras& e : extras) {
      acc += e.accepted;
      bad += e.bad_accepted;
    }
    s["mean_accepted"] = n == 0 ? 0.0 : acc / nn;
    s["bad_accepted_fraction"] = acc == 0.0 ? 0.0 : bad / acc;
    s["required_accepted"] = std::log(static_cast<double>(cfg.budget));
  }
  if (cfg.mode == Mode::Adversary) {
    double cost = 0.0, cost_max = 0.0;
    for (const TrialExtras& e : extras) {
      cost += e.cost;
      cost_max = std::max(cost_max, e.cost);
    }
    s["mean_cost"] = n == 0 ? 0.0 : cost / nn;
    s["max_cost"] = cost_max;
    s["infeasible_trials"] = infeasible;
    s["rate_constant"] = fisher::rate_constant(cfg.alpha, cfg.beta);
  }
  return s;
}

TrialOutputs run_trials(const ExperimentConfig& cfg) {
  cfg.validate();
  Reservoir reservoir = parse_reservoir(cfg.reservoir_spec);

  TrialOutputs out;
  out.rows.resize(cfg.trials);
  out.extras.resize(cfg.trials);

  TraceCollector trace;
  TraceCollector* trace_ptr = cfg.trace_path.empty() ? nullptr : &trace;

  int workers = std::min<std::uint64_t>(resolve_threads(cfg), cfg.trials);
  std::atomic<std::uint64_t> next{0};
  std::mutex err_mu;
  std::string first_error;

  auto work = [&] {
    while (true) {
      std::uint64_t t = next.fetch_add(1);
      if (t >= cfg.trials) return;
      try {
        TrialResult r = run_one(cfg, reservoir, t, trace_ptr);
        out.rows[t] = r.row;
        out.extras[t] = r.extras;
      } catch (const std::exception& e) {
        std::scoped_lock lock(err_mu);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (!first_error.empty()) throw std::runtime_error(first_error);

  if (!cfg.out_path.empty()) {
    std::ofstream f(cfg.out_path);
    if (!f) throw std::runtime_error("cannot write output file: " + cfg.out_path);
    if (cfg.format == "json") {
      f << rows_to_json(out.rows).dump(2) << "\n";
    } else {
      f << rows_to_csv(out.rows);
    }
  }
  if (trace_ptr) trace.write_sorted(cfg.trace_path);

  out.summary = summarize(cfg, out.rows, out.extras);
  return out;
}

}  // namespace infexplore::harness
