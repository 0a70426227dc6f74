#if defined(__x86_64__)

#include <immintrin.h>

#include "infexplore/kernels.hpp"

namespace infexplore::kernels {

namespace {

// 64x64 -> low 64 product from 32x32 partial products (AVX2 has no mullo_epi64).
inline __m256i mullo_epi64(__m256i a, __m256i b) {
  __m256i lo = _mm256_mul_epu32(a, b);
  __m256i ah = _mm256_srli_epi64(a, 32);
  __m256i bh = _mm256_srli_epi64(b, 32);
  __m256i cross =
      _mm256_add_epi64(_mm256_mul_epu32(ah, b), _mm256_mul_epu32(a, bh));
  return _mm256_add_epi64(lo, _mm256_slli_epi64(cross, 32));
}

inline __m256i fmix64x4(__m256i x) {
  const __m256i m1 = _mm256_set1_epi64x(static_cast<long long>(0xff51afd7ed558ccdULL));
  const __m256i m2 = _mm256_set1_epi64x(static_cast<long long>(0xc4ceb9fe1a85ec53ULL));
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 33));
  x = mullo_epi64(x, m1);
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 33));
  x = mullo_epi64(x, m2);
  x = _mm256_xor_si256(x, _mm256_srli_epi64(x, 33));
  return x;
}

}  // namespace

std::uint64_t count_successes_avx2(std::uint64_t base, std::uint64_t threshold,
                                   std::uint64_t n_begin, std::uint64_t n_end) {
  if (n_begin >= n_end) return 0;
  std::uint64_t n = n_begin;
  std::uint64_t count = 0;

  const std::uint64_t span = n_end - n_begin;
  if (span >= 4) {
    const std::uint64_t first = base + (n_begin + 1) * kGolden;
    __m256i state = _mm256_set_epi64x(
        static_cast<long long>(first + 3 * kGolden),
        static_cast<long long>(first + 2 * kGolden),
        static_cast<long long>(first + kGolden),
        static_cast<long long>(first));
    const __m256i step = _mm256_set1_epi64x(static_cast<long long>(4 * kGolden));
    // u53 and threshold are both < 2^63, so the signed compare is safe.
    const __m256i thr = _mm256_set1_epi64x(static_cast<long long>(threshold));
    __m256i acc = _mm256_setzero_si256();

    std::uint64_t blocks = span / 4;
    for (std::uint64_t b = 0; b < blocks; ++b) {
      __m256i u = _mm256_srli_epi64(fmix64x4(state), 11);
      acc = _mm256_sub_epi64(acc, _mm256_cmpgt_epi64(thr, u));
      state = _mm256_add_epi64(state, step);
    }
    alignas(32) std::uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    count = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    n += blocks * 4;
  }
  for (; n < n_end; ++n) {
    count += reward_u53(base, n) < threshold ? 1u : 0u;
  }
  return count;
}

bool avx2_supported() { return __builtin_cpu_supports("avx2"); }

}  // namespace infexplore::kernels

#endif  // __x86_64__
