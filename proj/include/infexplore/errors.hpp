#pragma once

#include <stdexcept>
#include <string>

namespace infexplore {

// Thrown by an environment once its sample budget is used up. The pulls that
// fit inside the budget are already recorded on the arm counters, so callers
// can catch this and finalize from whatever state they reached.
class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("sample budget exhausted") {}
};

// A distortion declaration with zero probability under the current posterior.
class InfeasibleDeclaration : public std::runtime_error {
 public:
  explicit InfeasibleDeclaration(const std::string& what)
      : std::runtime_error(what) {}
};

// Conditioned rejection sampling hit its retry cap with no enumeration
// fallback available.
class SamplingStalled : public std::runtime_error {
 public:
  explicit SamplingStalled(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace infexplore
