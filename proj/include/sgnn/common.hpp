#pragma once

// Shared basics: index/count types, thread control, error helpers.

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sgnn {

using index_t = std::int32_t;  // matrix/node indices (4-byte, matching the I/O model)
using count_t = std::int64_t;  // FLOP / byte / entry counts

inline int& thread_count_ref() {
  static int n = [] {
    if (const char* env = std::getenv("SGNN_THREADS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
  }();
  return n;
}

inline int num_threads() { return thread_count_ref(); }
inline void set_num_threads(int n) { thread_count_ref() = n < 1 ? 1 : n; }

[[noreturn]] inline void fail_invalid(const std::string& msg) {
  throw std::invalid_argument(msg);
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) fail_invalid(msg);
}

}  // namespace sgnn
