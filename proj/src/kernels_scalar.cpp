#include "infexplore/kernels.hpp"

namespace infexplore::kernels {

std::uint64_t count_successes_scalar(std::uint64_t base, std::uint64_t threshold,
                                     std::uint64_t n_begin, std::uint64_t n_end) {
  std::uint64_t count = 0;
  for (std::uint64_t n = n_begin; n < n_end; ++n) {
    count += reward_u53(base, n) < threshold ? 1u : 0u;
  }
  return count;
}

}  // namespace infexplore::kernels
