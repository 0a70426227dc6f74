#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

namespace infexplore {

// Outcome of one trial, shared across the fixed-confidence and fixed-budget
// drivers.
struct RunRecord {
  std::optional<std::size_t> chosen;
  double true_mean = std::nan("");
  std::uint64_t samples_used = 0;
  std::uint64_t arms_touched = 0;
  bool success = false;
  // Set when a derived parameter had to be clamped into its valid range to
  // keep a small-budget run meaningful.
  bool degenerate_params = false;
};

}  // namespace infexplore
