#pragma once

#include <cstddef>
#include <exception>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace granulab {

namespace detail {

#ifdef _OPENMP
inline int& requested_workers() {
  static int n = 0;
  return n;
}
#endif

}  // namespace detail

// Number of worker threads the parallel loops will use. 0 keeps the
// OpenMP runtime default.
inline void set_worker_count(int n) {
#ifdef _OPENMP
  detail::requested_workers() = n > 0 ? n : 0;
#else
  (void)n;
#endif
}

inline int worker_count() {
#ifdef _OPENMP
  int n = detail::requested_workers();
  return n > 0 ? n : omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs body(i) for i in [0, n). Iterations must write to disjoint state;
// results are then identical for any thread count. Exceptions are captured
// and rethrown on the calling thread.
template <typename F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
  if (n > 1 && worker_count() > 1) {
    std::exception_ptr err = nullptr;
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
#pragma omp critical
        if (!err) err = std::current_exception();
      }
    }
    if (err) std::rethrow_exception(err);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace granulab
