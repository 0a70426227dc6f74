#include "infexplore/kernels.hpp"

namespace infexplore::kernels {

namespace {

struct Selected {
  CountFn fn;
  const char* name;
};

Selected select() {
#if defined(__x86_64__)
  if (avx2_supported()) return {&count_successes_avx2, "avx2"};
#endif
  // TODO: NEON variant for aarch64; this dispatch is the only seam to touch.
  return {&count_successes_scalar, "scalar"};
}

const Selected& selected() {
  static const Selected s = select();
  return s;
}

}  // namespace

CountFn count_kernel() { return selected().fn; }

const char* active_kernel_name() { return selected().name; }

}  // namespace infexplore::kernels
