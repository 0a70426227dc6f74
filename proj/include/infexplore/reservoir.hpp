#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "infexplore/errors.hpp"

// Reservoir distributions over arm means in [0,1], and the seeded
// environment that lazily instantiates arms and serves Bernoulli rewards.

namespace infexplore {

struct DiscreteAtoms {
  struct Atom {
    double value;
    double weight;
  };
  std::vector<Atom> atoms;  // sorted by value after validation
};

struct UniformInterval {
  double lo;
  double hi;
};

struct PiecewiseConstantDensity {
  std::vector<double> breakpoints;  // x_0 < ... < x_m in [0,1]
  std::vector<double> levels;       // f_1..f_m >= 0, integrates to 1
};

class Reservoir {
 public:
  using Dist = std::variant<DiscreteAtoms, UniformInterval, PiecewiseConstantDensity>;

  static Reservoir atoms(std::vector<DiscreteAtoms::Atom> atoms);
  static Reservoir uniform(double lo, double hi);
  static Reservoir piecewise_constant(std::vector<double> breakpoints,
                                      std::vector<double> levels);

  // P[p <= tau]; right-continuous, nondecreasing, cdf(1) = 1. Values outside
  // [0,1] clamp to 0/1 output.
  double cdf(double tau) const;

  // Left-continuous inverse: inf { tau : cdf(tau) >= q } for q in (0,1].
  double inverse_cdf(double q) const;

  // Maximum of the support, inverse_cdf(1).
  double ess_sup() const;

  // (1 / (eta1 - eta2)) * integral of inverse_cdf over [1-eta1, 1-eta2],
  // for 0 < eta2 < eta1 < 1. Closed form for atoms and uniform intervals,
  // adaptive quadrature (abs tol 1e-10) for densities.
  double quantile_average(double eta1, double eta2) const;

  const Dist& dist() const { return dist_; }

  std::string describe() const;

 private:
  explicit Reservoir(Dist dist);

  Dist dist_;
  // Prefix masses for atoms / density segments, built once at validation.
  std::vector<double> cum_;
};

// Two-level density supported on [gamma_lo, gamma_hi], where
// theta(gamma_lo) = theta(beta) - rho^2 and theta(gamma_hi) =
// theta(alpha) + rho^2. Levels are chosen so that the mass above alpha is
// exactly eta, making inverse_cdf(1 - eta) = alpha.
struct AdmissibleReservoir {
  Reservoir reservoir;
  double alpha;
  double beta;
  double gamma_lo;
  double gamma_hi;
  double level_below_alpha;  // density on [gamma_lo, alpha]
  double level_above_alpha;  // density on [alpha, gamma_hi]
  double f_min;
  double f_max;
};

AdmissibleReservoir make_admissible(double alpha, double beta, double eta,
                                    double rho);

inline Reservoir admissible_reservoir(double alpha, double beta, double eta,
                                      double rho) {
  return make_admissible(alpha, beta, eta, rho).reservoir;
}

// Mini-language used by the CLI and config files:
//   uniform:LO,HI
//   atoms:V1@W1,V2@W2,...
//   admissible:alpha=A,beta=B,eta=E,rho=R
// Throws std::invalid_argument with the offending position on parse errors.
Reservoir parse_reservoir(const std::string& spec);

// ---------------------------------------------------------------------------
// Environments

struct ArmRecord {
  double true_mean = 0.0;  // hidden from algorithms
  std::uint64_t stream_base = 0;
  std::uint64_t threshold = 0;
  std::uint64_t pulls = 0;
  std::uint64_t reward = 0;
};

// Interface the algorithms run against. Batch pulls are the unit of work;
// per-pull bookkeeping stays inside the implementation.
class ArmSource {
 public:
  virtual ~ArmSource() = default;

  // Pulls arm i `count` more times and returns the number of successes.
  // When the budget runs out mid-request, the pulls that fit are recorded on
  // the counters and BudgetExhausted is thrown.
  virtual std::uint64_t pull_many(std::size_t i, std::uint64_t count) = 0;

  // Successes among the already-collected pulls [a, b) of arm i.
  virtual std::uint64_t successes_in_range(std::size_t i, std::uint64_t a,
                                           std::uint64_t b) const = 0;

  virtual std::uint64_t pulls(std::size_t i) const = 0;
  virtual std::uint64_t successes(std::size_t i) const = 0;
  virtual std::uint64_t samples_used() const = 0;
  virtual std::optional<std::uint64_t> budget() const = 0;

  // Arms instantiated so far; also the index of the next fresh arm.
  virtual std::size_t arms_touched() const = 0;

  std::size_t fresh_arm_index() const { return arms_touched(); }

  double empirical_mean(std::size_t i) const {
    return static_cast<double>(successes(i)) / static_cast<double>(pulls(i));
  }

  std::uint64_t budget_remaining() const;
};

class BanditEnv : public ArmSource {
 public:
  BanditEnv(Reservoir reservoir, std::uint64_t master_seed,
            std::optional<std::uint64_t> budget = std::nullopt);

  std::uint64_t pull_many(std::size_t i, std::uint64_t count) override;
  std::uint64_t successes_in_range(std::size_t i, std::uint64_t a,
                                   std::uint64_t b) const override;
  std::uint64_t pulls(std::size_t i) const override;
  std::uint64_t successes(std::size_t i) const override;
  std::uint64_t samples_used() const override { return samples_used_; }
  std::optional<std::uint64_t> budget() const override { return budget_; }
  std::size_t arms_touched() const override { return arms_.size(); }

  // Single reward, 0 or 1.
  int pull(std::size_t i);

  // Simulator-side accessor for scoring; instantiates the arm if needed.
  double true_mean(std::size_t i);

  const Reservoir& reservoir() const { return reservoir_; }
  std::uint64_t master_seed() const { return master_seed_; }

  void set_budget(std::optional<std::uint64_t> budget) { budget_ = budget; }

 private:
  void ensure_arm(std::size_t i);

  Reservoir reservoir_;
  std::uint64_t master_seed_;
  std::optional<std::uint64_t> budget_;
  std::uint64_t samples_used_ = 0;
  std::vector<ArmRecord> arms_;
};

}  // namespace infexplore
