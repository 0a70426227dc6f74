#pragma once

#include <cstddef>
#include <cstdint>

// Counter-based Bernoulli reward streams.
//
// Every reward in the simulator is a pure function of (stream base, pull
// index): hash the pair, keep the top 53 bits, compare against a fixed
// threshold. That makes reward sequences replayable in any order, lets
// batches of pulls be generated without per-pull state, and gives the SIMD
// and scalar paths bit-identical results to test against each other.

namespace infexplore::kernels {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// 64-bit finalizer (MurmurHash3 fmix64). Full avalanche, invertible.
inline std::uint64_t fmix64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

// Per-arm stream base. Arms get disjoint streams for any master seed; the
// base is independent of instantiation order.
inline std::uint64_t arm_stream_base(std::uint64_t master_seed,
                                     std::uint64_t arm_index) {
  return fmix64(master_seed ^ fmix64((arm_index + 1) * kGolden));
}

// 53-bit uniform variate for pull `n` (0-based) of the stream.
inline std::uint64_t reward_u53(std::uint64_t base, std::uint64_t n) {
  return fmix64(base + (n + 1) * kGolden) >> 11;
}

// Dedicated draw used for the arm's hidden mean, outside the reward counter
// sequence.
inline std::uint64_t mean_u53(std::uint64_t base) {
  return fmix64(base ^ 0xd1342543de82ef95ULL) >> 11;
}

inline double u53_to_unit(std::uint64_t u) {
  // (u + 1) * 2^-53 lies in (0, 1]; matches a left-continuous quantile pull.
  return static_cast<double>(u + 1) * 0x1p-53;
}

// Bernoulli(p) as an integer compare: reward = (u53 < threshold).
inline std::uint64_t bernoulli_threshold(double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return 1ULL << 53;
  return static_cast<std::uint64_t>(p * 0x1p53 + 0.5);
}

// Number of successes among pulls [n_begin, n_end) of the stream.
std::uint64_t count_successes_scalar(std::uint64_t base, std::uint64_t threshold,
                                     std::uint64_t n_begin, std::uint64_t n_end);

#if defined(__x86_64__)
std::uint64_t count_successes_avx2(std::uint64_t base, std::uint64_t threshold,
                                   std::uint64_t n_begin, std::uint64_t n_end);
bool avx2_supported();
#endif

using CountFn = std::uint64_t (*)(std::uint64_t, std::uint64_t, std::uint64_t,
                                  std::uint64_t);

// Runtime-dispatched kernel (AVX2 when the CPU has it, scalar otherwise).
CountFn count_kernel();

inline std::uint64_t count_successes(std::uint64_t base, std::uint64_t threshold,
                                     std::uint64_t n_begin, std::uint64_t n_end) {
  return count_kernel()(base, threshold, n_begin, n_end);
}

const char* active_kernel_name();

}  // namespace infexplore::kernels
