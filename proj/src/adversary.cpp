#include "infexplore/adversary.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "infexplore/fisher.hpp"
#include "infexplore/stats.hpp"

namespace infexplore {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double logsumexp(const std::vector<double>& v) {
  double mx = kNegInf;
  for (double x : v) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

}  // namespace

std::uint64_t power_floor(std::uint64_t n, double exponent) {
  // The nudge keeps exact integer powers (10^4^0.5 = 100) from rounding down.
  double v = std::exp(exponent * std::log(static_cast<double>(n)));
  v = std::floor(v * (1.0 + 1e-12));
  if (v >= 9.0e18) return 9000000000000000000ULL;  // far past any usable budget
  return static_cast<std::uint64_t>(v);
}

std::vector<std::uint64_t> batch_set(std::uint64_t n, double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::domain_error("rho must lie in (0,1)");
  std::uint64_t n2 = power_floor(n, 2.0 * rho);
  if (n2 < 2) throw std::domain_error("batch_set needs N^{2 rho} >= 2");
  std::uint64_t unit = std::max<std::uint64_t>(1, power_floor(n, rho));
  std::uint64_t n6 = power_floor(n, 6.0 * rho);
  std::uint64_t cap = static_cast<std::uint64_t>(
                          std::ceil(static_cast<double>(n) * (1.0 + rho))) +
                      2;

  // The three-regime construction is rho-slowly increasing once N is large
  // enough that unit <= 1 + rho N^{2 rho}. At smaller N the integer regime
  // is extended until the stride-`unit` jumps satisfy the slow-increase ratio, so
  // the invariant holds for every admissible input.
  std::uint64_t dense_top = std::max(
      n2, static_cast<std::uint64_t>(
              std::ceil((static_cast<double>(unit) - 1.0) / rho)));
  dense_top = std::min(dense_top, std::min(n6, cap));

  std::vector<std::uint64_t> b;
  for (std::uint64_t v = 1; v <= dense_top; ++v) b.push_back(v);
  for (std::uint64_t v = (dense_top / unit + 1) * unit; v <= n6; v += unit) {
    b.push_back(v);
    if (v >= cap) break;
  }
  if (b.back() < cap && n6 <= cap) {
    double g = static_cast<double>(n6);
    for (int j = 0;; ++j) {
      auto v = static_cast<std::uint64_t>(std::floor(g * (1.0 + 1e-12)));
      if (v > b.back()) b.push_back(v);
      if (v >= cap) break;
      g *= 1.0 + rho;
    }
  }
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

bool is_slowly_increasing(const std::vector<std::uint64_t>& batches, double rho) {
  for (std::size_t k = 0; k + 1 < batches.size(); ++k) {
    double ratio = static_cast<double>(batches[k + 1]) /
                   static_cast<double>(batches[k] + 1);
    if (ratio > 1.0 + rho + 1e-12) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

const char* Declaration::kind_name() const {
  switch (kind) {
    case Kind::BatchMeanAtMost: return "batch_mean_at_most";
    case Kind::ThetaDropAtLeast: return "theta_drop_at_least";
    case Kind::MeanStaysBelow: return "mean_stays_below";
    case Kind::FinalArmBelow: return "final_arm_below";
  }
  return "?";
}

namespace {

std::int64_t floor_count(double x) {
  if (x < 0.0) return -1;
  return static_cast<std::int64_t>(std::floor(x + 1e-9));
}

}  // namespace

Declaration declare_batch_mean_at_most(double bound, std::uint64_t batch_size) {
  Declaration d;
  d.kind = Declaration::Kind::BatchMeanAtMost;
  d.value = bound;
  d.max_successes = floor_count(bound * static_cast<double>(batch_size));
  d.max_successes = std::min<std::int64_t>(d.max_successes,
                                           static_cast<std::int64_t>(batch_size));
  return d;
}

Declaration declare_theta_drop(double decrement, std::uint64_t pulls,
                               std::uint64_t reward, std::uint64_t batch_size) {
  Declaration d;
  d.kind = Declaration::Kind::ThetaDropAtLeast;
  d.value = decrement;
  double phat = static_cast<double>(reward) / static_cast<double>(pulls);
  double target_theta = fisher::theta(phat) - decrement;
  if (target_theta < 0.0) {
    d.max_successes = -1;
    return d;
  }
  double target_mean = fisher::theta_inv(target_theta);
  std::int64_t total_cap =
      floor_count(target_mean * static_cast<double>(pulls + batch_size));
  d.max_successes = total_cap - static_cast<std::int64_t>(reward);
  if (d.max_successes < -1) d.max_successes = -1;
  d.max_successes = std::min<std::int64_t>(d.max_successes,
                                           static_cast<std::int64_t>(batch_size));
  return d;
}

Declaration declare_mean_stays_below(double bound, std::uint64_t pulls,
                                     std::uint64_t reward, std::uint64_t batch_size) {
  Declaration d;
  d.kind = Declaration::Kind::MeanStaysBelow;
  d.value = bound;
  std::int64_t total_cap =
      floor_count(bound * static_cast<double>(pulls + batch_size));
  d.max_successes = total_cap - static_cast<std::int64_t>(reward);
  if (d.max_successes < -1) d.max_successes = -1;
  d.max_successes = std::min<std::int64_t>(d.max_successes,
                                           static_cast<std::int64_t>(batch_size));
  return d;
}

Declaration declare_final_arm_below(double bound) {
  Declaration d;
  d.kind = Declaration::Kind::FinalArmBelow;
  d.value = bound;
  return d;
}

// ---------------------------------------------------------------------------

PosteriorGrid::PosteriorGrid(const AdmissibleReservoir& prior, int min_cells) {
  int total = std::max(min_cells, 512);
  double span = prior.gamma_hi - prior.gamma_lo;
  struct Seg {
    double lo, hi, level;
  };
  // beta and alpha are exact boundaries so prior tail masses are exact.
  std::array<Seg, 3> segs{{{prior.gamma_lo, prior.beta, prior.level_below_alpha},
                           {prior.beta, prior.alpha, prior.level_below_alpha},
                           {prior.alpha, prior.gamma_hi, prior.level_above_alpha}}};
  auto geom = std::make_shared<Geometry>();
  for (const Seg& s : segs) {
    double len = s.hi - s.lo;
    int cells = std::max(1, static_cast<int>(std::llround(
                                total * len / span)));
    for (int j = 0; j < cells; ++j) {
      double lo = s.lo + len * j / cells;
      double hi = j + 1 == cells ? s.hi : s.lo + len * (j + 1) / cells;
      geom->lo.push_back(lo);
      geom->hi.push_back(hi);
      geom->mid.push_back(0.5 * (lo + hi));
      log_weights_.push_back(std::log(s.level * (hi - lo)));
    }
  }
  geom_ = std::move(geom);
  renormalize();
}

double PosteriorGrid::point(std::size_t g) const { return geom_->mid[g]; }

void PosteriorGrid::renormalize() {
  double lse = logsumexp(log_weights_);
  if (lse == kNegInf) {
    throw InfeasibleDeclaration("posterior has no mass left");
  }
  weights_.resize(log_weights_.size());
  for (std::size_t g = 0; g < log_weights_.size(); ++g) {
    if (log_weights_[g] != kNegInf) log_weights_[g] -= lse;
    weights_[g] = std::exp(log_weights_[g]);
  }
}

void PosteriorGrid::update(std::uint64_t successes, std::uint64_t failures) {
  auto s = static_cast<double>(successes);
  auto f = static_cast<double>(failures);
  for (std::size_t g = 0; g < log_weights_.size(); ++g) {
    if (log_weights_[g] == kNegInf) continue;
    double m = geom_->mid[g];
    log_weights_[g] += s * std::log(m) + f * std::log1p(-m);
  }
  renormalize();
}

double PosteriorGrid::mean() const {
  double acc = 0.0;
  for (std::size_t g = 0; g < weights_.size(); ++g) acc += weights_[g] * geom_->mid[g];
  return acc;
}

double PosteriorGrid::prob_below(double x) const {
  double acc = 0.0;
  for (std::size_t g = 0; g < weights_.size(); ++g) {
    if (geom_->hi[g] <= x) acc += weights_[g];
  }
  return std::min(acc, 1.0);
}

double PosteriorGrid::log_prob_below(double x) const {
  double mx = kNegInf;
  for (std::size_t g = 0; g < log_weights_.size(); ++g) {
    if (geom_->hi[g] <= x) mx = std::max(mx, log_weights_[g]);
  }
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t g = 0; g < log_weights_.size(); ++g) {
    if (geom_->hi[g] <= x) s += std::exp(log_weights_[g] - mx);
  }
  return mx + std::log(s);
}

void PosteriorGrid::condition_below(double x) {
  for (std::size_t g = 0; g < log_weights_.size(); ++g) {
    if (geom_->hi[g] > x) log_weights_[g] = kNegInf;
  }
  renormalize();
}

std::size_t PosteriorGrid::sample_cell(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double acc = 0.0;
  for (std::size_t g = 0; g < weights_.size(); ++g) {
    acc += weights_[g];
    if (u <= acc) return g;
  }
  return weights_.size() - 1;
}

double PosteriorGrid::sample_value(std::mt19937_64& rng) const {
  std::size_t g = sample_cell(rng);
  std::uniform_real_distribution<double> unif(geom_->lo[g], geom_->hi[g]);
  return unif(rng);
}

// ---------------------------------------------------------------------------

double declaration_probability(const PosteriorGrid& post,
                               std::uint64_t batch_size, const Declaration& d) {
  double p;
  if (d.kind == Declaration::Kind::FinalArmBelow) {
    p = post.prob_below(d.value);
  } else {
    if (batch_size < 1) throw std::domain_error("batch_size must be >= 1");
    if (d.max_successes < 0) {
      throw InfeasibleDeclaration(std::string("impossible ") + d.kind_name());
    }
    if (d.max_successes >= static_cast<std::int64_t>(batch_size)) return 1.0;
    auto kmax = static_cast<std::uint64_t>(d.max_successes);
    p = 0.0;
    for (std::size_t g = 0; g < post.size(); ++g) {
      if (post.weight(g) == 0.0) continue;
      p += post.weight(g) * stats::binom_cdf(batch_size, post.point(g), kmax);
    }
  }
  if (!(p > 0.0)) {
    throw InfeasibleDeclaration(std::string("zero-probability ") + d.kind_name());
  }
  return std::min(p, 1.0);
}

std::vector<std::uint8_t> sample_conditioned(const PosteriorGrid& post,
                                             std::uint64_t batch_size,
                                             const Declaration& d,
                                             std::mt19937_64& rng) {
  if (d.kind == Declaration::Kind::FinalArmBelow) {
    throw std::logic_error("final-arm declarations have no batch to sample");
  }
  if (d.max_successes < 0) {
    throw InfeasibleDeclaration("sampling a zero-probability declaration");
  }
  const std::int64_t kmax = d.max_successes;
  std::vector<std::uint8_t> seq(batch_size);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  constexpr int kRetryCap = 1'000'000;
  for (int attempt = 0; attempt < kRetryCap; ++attempt) {
    double p = post.sample_value(rng);
    std::int64_t total = 0;
    for (std::uint64_t j = 0; j < batch_size; ++j) {
      seq[j] = unif(rng) < p ? 1 : 0;
      total += seq[j];
    }
    if (total <= kmax) return seq;
  }
  if (batch_size > 20) {
    throw SamplingStalled("rejection cap hit with batch too large to enumerate");
  }
  // Exact conditional law of the batch total, then a uniform arrangement.
  std::vector<double> tw(static_cast<std::size_t>(kmax) + 1, 0.0);
  double norm = 0.0;
  for (std::size_t g = 0; g < post.size(); ++g) {
    if (post.weight(g) == 0.0) continue;
    for (std::int64_t r = 0; r <= kmax; ++r) {
      double w = post.weight(g) *
                 stats::binom_pmf(batch_size, post.point(g),
                                  static_cast<std::uint64_t>(r));
      tw[static_cast<std::size_t>(r)] += w;
      norm += w;
    }
  }
  if (norm <= 0.0) throw InfeasibleDeclaration("conditional batch law has no mass");
  double u = unif(rng) * norm;
  std::int64_t r = kmax;
  double acc = 0.0;
  for (std::int64_t j = 0; j <= kmax; ++j) {
    acc += tw[static_cast<std::size_t>(j)];
    if (u <= acc) {
      r = j;
      break;
    }
  }
  // uniform arrangement of r successes: partial Fisher-Yates
  std::fill(seq.begin(), seq.end(), 0);
  std::vector<std::uint64_t> slots(batch_size);
  for (std::uint64_t j = 0; j < batch_size; ++j) slots[j] = j;
  for (std::int64_t placed = 0; placed < r; ++placed) {
    std::uniform_int_distribution<std::uint64_t> pick(placed, batch_size - 1);
    std::swap(slots[placed], slots[pick(rng)]);
    seq[slots[placed]] = 1;
  }
  return seq;
}

// ---------------------------------------------------------------------------

void CostLedger::add(std::uint64_t t, std::size_t arm, const Declaration& d,
                     double log_p) {
  LedgerEntry e;
  e.t = t;
  e.arm = arm;
  e.declaration = d;
  e.log_probability = log_p;
  e.probability = std::exp(log_p);
  e.cum_cost = total_cost() - log_p;
  entries.push_back(e);
}

std::string CostLedger::to_jsonl() const {
  std::ostringstream out;
  char buf[512];
  for (const LedgerEntry& e : entries) {
    std::snprintf(buf, sizeof buf,
                  "{\"t\":%llu,\"arm\":%zu,\"declaration\":{\"kind\":\"%s\","
                  "\"value\":%.17g},\"P_t\":%.17g,\"log_P_t\":%.17g,"
                  "\"cum_cost\":%.17g}\n",
                  static_cast<unsigned long long>(e.t), e.arm,
                  e.declaration.kind_name(), e.declaration.value, e.probability,
                  e.log_probability, e.cum_cost);
    out << buf;
  }
  return out.str();
}

// ---------------------------------------------------------------------------

BatchCompressedEnv::BatchCompressedEnv(ArmSource& inner,
                                       std::vector<std::uint64_t> batches)
    : inner_(inner), batches_(std::move(batches)) {
  if (batches_.empty()) throw std::domain_error("empty batch set");
}

std::uint64_t BatchCompressedEnv::pull_many(std::size_t i, std::uint64_t count) {
  if (i >= view_pulls_.size()) {
    view_pulls_.resize(i + 1, 0);
    view_succ_.resize(i + 1, 0);
  }
  std::uint64_t prev = view_pulls_[i];
  std::uint64_t target = prev + count;
  std::uint64_t outer_now = inner_.pulls(i);
  if (outer_now < target) {
    auto it = std::lower_bound(batches_.begin(), batches_.end(), target);
    if (it == batches_.end()) throw std::logic_error("batch set exhausted");
    try {
      inner_.pull_many(i, *it - outer_now);
    } catch (const BudgetExhausted&) {
      std::uint64_t served = std::min(target, inner_.pulls(i));
      if (served > prev) {
        view_succ_[i] += inner_.successes_in_range(i, prev, served);
        inner_total_ += served - prev;
        view_pulls_[i] = served;
      }
      throw;
    }
  }
  std::uint64_t s = inner_.successes_in_range(i, prev, target);
  view_pulls_[i] = target;
  view_succ_[i] += s;
  inner_total_ += count;
  return s;
}

std::uint64_t BatchCompressedEnv::successes_in_range(std::size_t i,
                                                     std::uint64_t a,
                                                     std::uint64_t b) const {
  return inner_.successes_in_range(i, a, b);
}

std::uint64_t BatchCompressedEnv::pulls(std::size_t i) const {
  return i < view_pulls_.size() ? view_pulls_[i] : 0;
}

std::uint64_t BatchCompressedEnv::successes(std::size_t i) const {
  return i < view_succ_.size() ? view_succ_[i] : 0;
}

// ---------------------------------------------------------------------------

AdversarialEnv::AdversarialEnv(AdmissibleReservoir prior, std::uint64_t n,
                               double rho, std::uint64_t seed, int grid_cells)
    : prior_(std::move(prior)),
      n_(n),
      rho_(rho),
      grid_cells_(grid_cells),
      prior_grid_(prior_, grid_cells),
      rng_(seed) {
  n2_ = power_floor(n_, 2.0 * rho_);
  if (n2_ < 2) throw std::domain_error("adversary needs N^{2 rho} >= 2");
  n6_ = power_floor(n_, 6.0 * rho_);
  batch_unit_ = std::max<std::uint64_t>(1, power_floor(n_, rho_));
  step2_bound_ = prior_.gamma_hi -
                 std::exp(-rho_ * std::log(static_cast<double>(n_)));
  theta_decrement_ = rho_ * (1.0 + 10.0 * rho_) *
                     fisher::fisher_distance(prior_.alpha, prior_.beta) /
                     std::log(static_cast<double>(n_));
  batches_ = batch_set(n_, rho_);
}

void AdversarialEnv::ensure_arm(std::size_t i) {
  if (i > arms_.size()) {
    throw std::logic_error("arms must be instantiated in index order");
  }
  if (i == arms_.size()) arms_.emplace_back();
}

PosteriorGrid& AdversarialEnv::grid(std::size_t i) {
  Arm& a = arms_[i];
  if (!a.grid) {
    // Rebuilt from counts when revisited; only the arm under study keeps its
    // grid hot. Posterior depends on (pulls, reward) only.
    a.grid = std::make_unique<PosteriorGrid>(prior_grid_);
    if (a.outer > 0) a.grid->update(a.reward_total, a.outer - a.reward_total);
    for (Arm& other : arms_) {
      if (&other != &a && other.grid && !other.finalized) other.grid.reset();
    }
  }
  return *a.grid;
}

void AdversarialEnv::advance_one_batch(std::size_t i, std::uint64_t target) {
  Arm& a = arms_[i];
  std::uint64_t next;
  if (a.outer < n2_) {
    // Silent regime: every integer up to N^{2 rho} is a checkpoint and no
    // declaration is made, so consecutive one-pull batches can be served as
    // one larger draw from the same joint posterior predictive.
    next = std::min(std::max(target, a.outer + 1), n2_);
  } else {
    auto it = std::upper_bound(batches_.begin(), batches_.end(), a.outer);
    if (it == batches_.end()) throw std::logic_error("batch set exhausted");
    next = *it;
  }
  std::uint64_t bsize = next - a.outer;

  std::optional<Declaration> dec;
  if (next <= n2_) {
    // silent regime: no declaration while the arm has few samples
  } else if (next <= n6_) {
    dec = declare_batch_mean_at_most(step2_bound_, bsize);
  } else if (static_cast<double>(a.reward_total) >
             prior_.beta * static_cast<double>(a.outer)) {
    dec = declare_theta_drop(theta_decrement_, a.outer, a.reward_total, bsize);
  } else {
    dec = declare_mean_stays_below(prior_.beta, a.outer, a.reward_total, bsize);
  }

  PosteriorGrid& g = grid(i);
  std::vector<std::uint8_t> batch;
  if (dec) {
    double p;
    try {
      p = declaration_probability(g, bsize, *dec);
    } catch (const InfeasibleDeclaration&) {
      ledger_.aborted = true;
      ledger_.abort_reason = std::string("infeasible ") + dec->kind_name();
      throw;
    }
    ledger_.add(outer_used_ + bsize, i, *dec, std::log(p));
    batch = sample_conditioned(g, bsize, *dec, rng_);
    std::int64_t total = 0;
    for (auto r : batch) total += r;
    if (total > dec->max_successes) {
      throw std::logic_error("conditioned batch violates its declaration");
    }
  } else {
    Declaration always = declare_batch_mean_at_most(1.0, bsize);
    batch = sample_conditioned(g, bsize, always, rng_);
  }

  std::uint64_t s = 0;
  for (auto r : batch) s += r;
  a.rewards.insert(a.rewards.end(), batch.begin(), batch.end());
  a.outer = next;
  a.reward_total += s;
  outer_used_ += bsize;
  g.update(s, bsize - s);
}

std::uint64_t AdversarialEnv::pull_many(std::size_t i, std::uint64_t count) {
  ensure_arm(i);
  Arm& a = arms_[i];
  std::uint64_t remaining = n_ - inner_used_;
  std::uint64_t take = std::min(count, remaining);
  std::uint64_t target = a.inner + take;
  while (a.outer < target) advance_one_batch(i, target);
  std::uint64_t s = 0;
  for (std::uint64_t j = a.inner; j < target; ++j) s += a.rewards[j];
  a.inner = target;
  a.inner_succ += s;
  inner_used_ += take;
  if (take < count) throw BudgetExhausted();
  return s;
}

std::uint64_t AdversarialEnv::successes_in_range(std::size_t i, std::uint64_t a,
                                                 std::uint64_t b) const {
  const Arm& arm = arms_.at(i);
  if (b > arm.inner || a > b) throw std::logic_error("range beyond collected pulls");
  std::uint64_t s = 0;
  for (std::uint64_t j = a; j < b; ++j) s += arm.rewards[j];
  return s;
}

std::uint64_t AdversarialEnv::pulls(std::size_t i) const {
  return i < arms_.size() ? arms_[i].inner : 0;
}

std::uint64_t AdversarialEnv::successes(std::size_t i) const {
  return i < arms_.size() ? arms_[i].inner_succ : 0;
}

void AdversarialEnv::declare_final(std::size_t i) {
  ensure_arm(i);
  PosteriorGrid& g = grid(i);
  Declaration d = declare_final_arm_below(prior_.beta);
  double log_p = g.log_prob_below(prior_.beta);
  if (log_p == -std::numeric_limits<double>::infinity()) {
    ledger_.aborted = true;
    ledger_.abort_reason = "infeasible final_arm_below";
    throw InfeasibleDeclaration(ledger_.abort_reason);
  }
  ledger_.add(outer_used_, i, d, log_p);
  g.condition_below(prior_.beta);
  arms_[i].finalized = true;
}

double AdversarialEnv::sample_final_mean(std::size_t i) {
  Arm& a = arms_.at(i);
  if (!a.finalized || !a.grid) {
    throw std::logic_error("sample_final_mean before declare_final");
  }
  return a.grid->sample_value(rng_);
}

// ---------------------------------------------------------------------------

AdversarialOutcome run_adversarial(
    const std::function<RunRecord(ArmSource&)>& algorithm, std::uint64_t n,
    double rho, double alpha, double beta, double eta, std::uint64_t seed,
    int grid_cells) {
  AdversarialEnv env(make_admissible(alpha, beta, eta, rho), n, rho, seed,
                     grid_cells);
  AdversarialOutcome out;
  try {
    RunRecord rec = algorithm(env);
    if (!rec.chosen) throw std::logic_error("adversarial run produced no arm");
    env.declare_final(*rec.chosen);
    rec.true_mean = env.sample_final_mean(*rec.chosen);
    rec.success = false;  // forced below beta under the conditioned measure
    out.record = rec;
  } catch (const InfeasibleDeclaration&) {
    out.infeasible = true;
    out.record.samples_used = env.samples_used();
    out.record.arms_touched = env.arms_touched();
  }
  out.ledger = env.ledger();
  return out;
}

StrengthReport strength_report(double alpha, double beta, double rho,
                               std::uint64_t n, const CostLedger& ledger) {
  StrengthReport r;
  r.cost = ledger.total_cost();
  double log_n = std::log(static_cast<double>(n));
  double scale = static_cast<double>(n) / (log_n * log_n);
  double c = fisher::rate_constant(alpha, beta);
  r.c_fit = (r.cost / scale - c) / rho;
  r.reference_envelope = (c + r.c_fit * rho) * scale;
  r.log_implied_floor = -r.cost;
  r.implied_floor = std::exp(-r.cost);
  return r;
}

}  // namespace infexplore
