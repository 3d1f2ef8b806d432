#pragma once

#include <cstddef>
#include <functional>

namespace fincap {

// Worker count used by node-parallel loops. Defaults to 1.
void set_thread_count(int threads);
int thread_count();

// Runs body(i) for i in [0, count) split into contiguous chunks, one per
// worker. Bodies must write only to their own indices; callers reduce
// afterwards in index order so results do not depend on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace fincap
