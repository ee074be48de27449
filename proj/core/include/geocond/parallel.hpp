#pragma once

#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace geocond {

inline int hardware_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

/// Caps the worker pool used by all parallel kernels. 0 restores the
/// hardware default. Kernel results are identical for any worker count:
/// every output element is accumulated by exactly one worker in a fixed
/// order.
inline void set_workers(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n > 0 ? n : hardware_workers());
#else
  (void)n;
#endif
}

}  // namespace geocond
