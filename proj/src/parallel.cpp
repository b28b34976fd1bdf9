#include "ocgs/parallel.hpp"

#include <exception>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ocgs {

namespace {
int g_threads = 0;
}

void set_thread_count(int n) { g_threads = n > 0 ? n : 0; }

int thread_count() {
#ifdef _OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
#ifdef _OPENMP
  const int threads = thread_count();
  if (threads > 1 && n > 1) {
    // Exceptions cannot cross an OpenMP region; keep the one from the lowest index.
    std::vector<std::exception_ptr> errors(n);
    const long long count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long long i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace ocgs
