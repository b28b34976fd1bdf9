#pragma once

#include <cstddef>
#include <functional>

namespace ocgs {

/// Caps worker threads for all parallel loops; n <= 0 restores the runtime default.
void set_thread_count(int n);
int thread_count();

/// Runs body(i) for i in [0, n) with dynamic scheduling. Bodies must write disjoint data.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace ocgs
