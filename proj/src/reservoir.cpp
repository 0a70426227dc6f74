#include "infexplore/reservoir.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "infexplore/fisher.hpp"
#include "infexplore/kernels.hpp"

namespace infexplore {

namespace {

constexpr double kMassTol = 1e-12;

void require(bool cond, const char* msg) {
  if (!cond) throw std::invalid_argument(msg);
}

double integrate_linear(double a, double b, double va, double slope) {
  // integral over [a,b] of va + slope * (x - a)
  double w = b - a;
  return w * va + 0.5 * slope * w * w;
}

}  // namespace

Reservoir::Reservoir(Dist dist) : dist_(std::move(dist)) {
  if (auto* d = std::get_if<DiscreteAtoms>(&dist_)) {
    require(!d->atoms.empty(), "atoms: empty atom list");
    std::sort(d->atoms.begin(), d->atoms.end(),
              [](const auto& x, const auto& y) { return x.value < y.value; });
    double mass = 0.0;
    for (const auto& a : d->atoms) {
      require(a.value >= 0.0 && a.value <= 1.0, "atoms: value outside [0,1]");
      require(a.weight >= 0.0, "atoms: negative weight");
      mass += a.weight;
      cum_.push_back(mass);
    }
    require(std::abs(mass - 1.0) <= kMassTol, "atoms: weights must sum to 1");
    cum_.back() = 1.0;
  } else if (auto* u = std::get_if<UniformInterval>(&dist_)) {
    require(u->lo >= 0.0 && u->hi <= 1.0 && u->lo < u->hi,
            "uniform: need 0 <= lo < hi <= 1");
  } else {
    auto& p = std::get<PiecewiseConstantDensity>(dist_);
    require(p.breakpoints.size() >= 2, "density: need at least one segment");
    require(p.levels.size() + 1 == p.breakpoints.size(),
            "density: levels must be one shorter than breakpoints");
    require(p.breakpoints.front() >= 0.0 && p.breakpoints.back() <= 1.0,
            "density: support outside [0,1]");
    double mass = 0.0;
    for (std::size_t j = 0; j + 1 < p.breakpoints.size(); ++j) {
      require(p.breakpoints[j] < p.breakpoints[j + 1],
              "density: breakpoints not increasing");
      require(p.levels[j] >= 0.0, "density: negative level");
      mass += p.levels[j] * (p.breakpoints[j + 1] - p.breakpoints[j]);
      cum_.push_back(mass);
    }
    require(std::abs(mass - 1.0) <= kMassTol, "density: must integrate to 1");
    cum_.back() = 1.0;
  }
}

Reservoir Reservoir::atoms(std::vector<DiscreteAtoms::Atom> atoms) {
  return Reservoir(DiscreteAtoms{std::move(atoms)});
}

Reservoir Reservoir::uniform(double lo, double hi) {
  return Reservoir(UniformInterval{lo, hi});
}

Reservoir Reservoir::piecewise_constant(std::vector<double> breakpoints,
                                        std::vector<double> levels) {
  return Reservoir(PiecewiseConstantDensity{std::move(breakpoints), std::move(levels)});
}

double Reservoir::cdf(double tau) const {
  if (auto* d = std::get_if<DiscreteAtoms>(&dist_)) {
    double mass = 0.0;
    for (std::size_t j = 0; j < d->atoms.size(); ++j) {
      if (d->atoms[j].value <= tau) mass = cum_[j];
    }
    return mass;
  }
  if (auto* u = std::get_if<UniformInterval>(&dist_)) {
    return std::clamp((tau - u->lo) / (u->hi - u->lo), 0.0, 1.0);
  }
  const auto& p = std::get<PiecewiseConstantDensity>(dist_);
  if (tau <= p.breakpoints.front()) return 0.0;
  if (tau >= p.breakpoints.back()) return 1.0;
  double mass = 0.0;
  for (std::size_t j = 0; j < p.levels.size(); ++j) {
    double left = p.breakpoints[j];
    double right = p.breakpoints[j + 1];
    if (tau >= right) {
      mass = cum_[j];
    } else {
      mass += p.levels[j] * (tau - left);
      break;
    }
  }
  return std::min(mass, 1.0);
}

double Reservoir::inverse_cdf(double q) const {
  if (!(q > 0.0 && q <= 1.0)) throw std::domain_error("inverse_cdf needs q in (0,1]");
  if (auto* d = std::get_if<DiscreteAtoms>(&dist_)) {
    auto it = std::lower_bound(cum_.begin(), cum_.end(), q);
    return d->atoms[static_cast<std::size_t>(it - cum_.begin())].value;
  }
  if (auto* u = std::get_if<UniformInterval>(&dist_)) {
    return u->lo + q * (u->hi - u->lo);
  }
  const auto& p = std::get<PiecewiseConstantDensity>(dist_);
  double prev = 0.0;
  for (std::size_t j = 0; j < p.levels.size(); ++j) {
    if (cum_[j] >= q && p.levels[j] > 0.0) {
      double x = p.breakpoints[j] + (q - prev) / p.levels[j];
      return std::clamp(x, p.breakpoints[j], p.breakpoints[j + 1]);
    }
    prev = cum_[j];
  }
  // q == 1 with trailing zero-density segments: top of the positive part.
  for (std::size_t j = p.levels.size(); j-- > 0;) {
    if (p.levels[j] > 0.0) return p.breakpoints[j + 1];
  }
  return p.breakpoints.back();
}

double Reservoir::ess_sup() const { return inverse_cdf(1.0); }

double Reservoir::quantile_average(double eta1, double eta2) const {
  if (!(eta2 > 0.0 && eta2 < eta1 && eta1 < 1.0)) {
    throw std::domain_error("quantile_average needs 0 < eta2 < eta1 < 1");
  }
  double a = 1.0 - eta1;
  double b = 1.0 - eta2;
  if (auto* d = std::get_if<DiscreteAtoms>(&dist_)) {
    // inverse_cdf is a step function of q: value v_j on (cum_{j-1}, cum_j].
    double total = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < d->atoms.size(); ++j) {
      double lo = std::max(a, prev);
      double hi = std::min(b, cum_[j]);
      if (hi > lo) total += d->atoms[j].value * (hi - lo);
      prev = cum_[j];
    }
    return total / (eta1 - eta2);
  }
  if (auto* u = std::get_if<UniformInterval>(&dist_)) {
    double total = integrate_linear(a, b, u->lo + a * (u->hi - u->lo), u->hi - u->lo);
    return total / (eta1 - eta2);
  }
  // Densities: adaptive Simpson on the quantile function, abs tol 1e-10.
  const double tol = 1e-10;
  struct Rec {
    const Reservoir* r;
    double operator()(double x) const { return r->inverse_cdf(x); }
  } f{this};
  // plain recursive adaptive Simpson
  auto simpson = [](double lo, double hi, double flo, double fmid, double fhi) {
    return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
  };
  struct Frame {
    double lo, hi, flo, fmid, fhi, whole, tol;
    int depth;
  };
  double mid = 0.5 * (a + b);
  double total = 0.0;
  std::vector<Frame> stack;
  stack.push_back({a, b, f(a), f(mid), f(b), simpson(a, b, f(a), f(mid), f(b)), tol, 48});
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    double m = 0.5 * (fr.lo + fr.hi);
    double lm = 0.5 * (fr.lo + m);
    double rm = 0.5 * (m + fr.hi);
    double flm = f(lm);
    double frm = f(rm);
    double left = simpson(fr.lo, m, fr.flo, flm, fr.fmid);
    double right = simpson(m, fr.hi, fr.fmid, frm, fr.fhi);
    if (fr.depth <= 0 || std::abs(left + right - fr.whole) <= 15.0 * fr.tol) {
      total += left + right + (left + right - fr.whole) / 15.0;
    } else {
      stack.push_back({fr.lo, m, fr.flo, flm, fr.fmid, left, fr.tol / 2.0, fr.depth - 1});
      stack.push_back({m, fr.hi, fr.fmid, frm, fr.fhi, right, fr.tol / 2.0, fr.depth - 1});
    }
  }
  return total / (eta1 - eta2);
}

std::string Reservoir::describe() const {
  char buf[64];
  std::ostringstream out;
  if (auto* d = std::get_if<DiscreteAtoms>(&dist_)) {
    out << "atoms:";
    for (std::size_t j = 0; j < d->atoms.size(); ++j) {
      if (j) out << ",";
      std::snprintf(buf, sizeof buf, "%.17g@%.17g", d->atoms[j].value, d->atoms[j].weight);
      out << buf;
    }
  } else if (auto* u = std::get_if<UniformInterval>(&dist_)) {
    std::snprintf(buf, sizeof buf, "uniform:%.17g,%.17g", u->lo, u->hi);
    out << buf;
  } else {
    const auto& p = std::get<PiecewiseConstantDensity>(dist_);
    out << "pwc:";
    for (std::size_t j = 0; j < p.breakpoints.size(); ++j) {
      if (j) out << ",";
      std::snprintf(buf, sizeof buf, "%.17g", p.breakpoints[j]);
      out << buf;
    }
    out << ";";
    for (std::size_t j = 0; j < p.levels.size(); ++j) {
      if (j) out << ",";
      std::snprintf(buf, sizeof buf, "%.17g", p.levels[j]);
      out << buf;
    }
  }
  return out.str();
}

AdmissibleReservoir make_admissible(double alpha, double beta, double eta,
                                    double rho) {
  if (!(beta > 0.0 && beta < alpha && alpha < 1.0)) {
    throw std::domain_error("admissible: need 0 < beta < alpha < 1");
  }
  if (!(eta > 0.0 && eta < 1.0)) throw std::domain_error("admissible: eta in (0,1)");
  if (!(rho > 0.0)) throw std::domain_error("admissible: rho > 0");
  double r2 = rho * rho;
  double t_lo = fisher::theta(beta) - r2;
  double t_hi = fisher::theta(alpha) + r2;
  constexpr double kPi = 3.14159265358979323846;
  if (!(t_lo > 0.0 && t_hi < kPi)) {
    throw std::domain_error("admissible: rho too large for these alpha, beta");
  }
  AdmissibleReservoir out{
      Reservoir::uniform(0, 1),  // placeholder, replaced below
      alpha,
      beta,
      fisher::theta_inv(t_lo),
      fisher::theta_inv(t_hi),
      0.0,
      0.0,
      0.0,
      0.0,
  };
  out.level_below_alpha = (1.0 - eta) / (alpha - out.gamma_lo);
  out.level_above_alpha = eta / (out.gamma_hi - alpha);
  out.f_min = std::min(out.level_below_alpha, out.level_above_alpha);
  out.f_max = std::max(out.level_below_alpha, out.level_above_alpha);
  out.reservoir = Reservoir::piecewise_constant(
      {out.gamma_lo, alpha, out.gamma_hi},
      {out.level_below_alpha, out.level_above_alpha});
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

[[noreturn]] void parse_fail(const std::string& spec, std::size_t pos,
                             const std::string& what) {
  throw std::invalid_argument("reservoir spec '" + spec + "': " + what +
                              " at position " + std::to_string(pos));
}

double parse_double(const std::string& spec, std::size_t& pos) {
  std::size_t consumed = 0;
  double v;
  try {
    v = std::stod(spec.substr(pos), &consumed);
  } catch (const std::exception&) {
    parse_fail(spec, pos, "expected a number");
  }
  pos += consumed;
  return v;
}

void expect_char(const std::string& spec, std::size_t& pos, char c) {
  if (pos >= spec.size() || spec[pos] != c) {
    parse_fail(spec, pos, std::string("expected '") + c + "'");
  }
  ++pos;
}

double parse_kv(const std::string& spec, std::size_t& pos, const std::string& key) {
  if (spec.compare(pos, key.size(), key) != 0) {
    parse_fail(spec, pos, "expected '" + key + "'");
  }
  pos += key.size();
  expect_char(spec, pos, '=');
  return parse_double(spec, pos);
}

}  // namespace

Reservoir parse_reservoir(const std::string& spec) {
  std::size_t pos = 0;
  auto starts_with = [&](const char* prefix) {
    std::size_t n = std::string(prefix).size();
    if (spec.compare(0, n, prefix) == 0) {
      pos = n;
      return true;
    }
    return false;
  };
  if (starts_with("uniform:")) {
    double lo = parse_double(spec, pos);
    expect_char(spec, pos, ',');
    double hi = parse_double(spec, pos);
    if (pos != spec.size()) parse_fail(spec, pos, "trailing characters");
    return Reservoir::uniform(lo, hi);
  }
  if (starts_with("atoms:")) {
    std::vector<DiscreteAtoms::Atom> atoms;
    while (true) {
      double v = parse_double(spec, pos);
      expect_char(spec, pos, '@');
      double w = parse_double(spec, pos);
      atoms.push_back({v, w});
      if (pos == spec.size()) break;
      expect_char(spec, pos, ',');
    }
    return Reservoir::atoms(std::move(atoms));
  }
  if (starts_with("admissible:")) {
    double alpha = parse_kv(spec, pos, "alpha");
    expect_char(spec, pos, ',');
    double beta = parse_kv(spec, pos, "beta");
    expect_char(spec, pos, ',');
    double eta = parse_kv(spec, pos, "eta");
    expect_char(spec, pos, ',');
    double rho = parse_kv(spec, pos, "rho");
    if (pos != spec.size()) parse_fail(spec, pos, "trailing characters");
    return admissible_reservoir(alpha, beta, eta, rho);
  }
  parse_fail(spec, 0, "unknown reservoir kind (want uniform:/atoms:/admissible:)");
}

// ---------------------------------------------------------------------------
// Environments

std::uint64_t ArmSource::budget_remaining() const {
  auto b = budget();
  if (!b) return UINT64_MAX;
  return *b - samples_used();
}

BanditEnv::BanditEnv(Reservoir reservoir, std::uint64_t master_seed,
                     std::optional<std::uint64_t> budget)
    : reservoir_(std::move(reservoir)), master_seed_(master_seed), budget_(budget) {}

void BanditEnv::ensure_arm(std::size_t i) {
  if (i > arms_.size()) {
    // Instantiating out of order would still be deterministic, but the
    // algorithms here only ever move forward; catch the bug instead.
    throw std::logic_error("arms must be instantiated in index order");
  }
  if (i == arms_.size()) {
    ArmRecord rec;
    rec.stream_base = kernels::arm_stream_base(master_seed_, i);
    double u = kernels::u53_to_unit(kernels::mean_u53(rec.stream_base));
    rec.true_mean = reservoir_.inverse_cdf(u);
    rec.threshold = kernels::bernoulli_threshold(rec.true_mean);
    arms_.push_back(rec);
  }
}

std::uint64_t BanditEnv::pull_many(std::size_t i, std::uint64_t count) {
  ensure_arm(i);
  bool exhausted = false;
  if (budget_) {
    std::uint64_t rem = *budget_ - samples_used_;
    if (count > rem) {
      count = rem;
      exhausted = true;
    }
  }
  ArmRecord& a = arms_[i];
  std::uint64_t succ =
      kernels::count_successes(a.stream_base, a.threshold, a.pulls, a.pulls + count);
  a.pulls += count;
  a.reward += succ;
  samples_used_ += count;
  if (exhausted) throw BudgetExhausted();
  return succ;
}

std::uint64_t BanditEnv::successes_in_range(std::size_t i, std::uint64_t a,
                                            std::uint64_t b) const {
  const ArmRecord& rec = arms_.at(i);
  if (b > rec.pulls || a > b) throw std::logic_error("range beyond collected pulls");
  return kernels::count_successes(rec.stream_base, rec.threshold, a, b);
}

std::uint64_t BanditEnv::pulls(std::size_t i) const {
  return i < arms_.size() ? arms_[i].pulls : 0;
}

std::uint64_t BanditEnv::successes(std::size_t i) const {
  return i < arms_.size() ? arms_[i].reward : 0;
}

int BanditEnv::pull(std::size_t i) {
  return static_cast<int>(pull_many(i, 1));
}

double BanditEnv::true_mean(std::size_t i) {
  ensure_arm(i);
  return arms_[i].true_mean;
}

}  // namespace infexplore
