#pragma once

#include <cstddef>
#include <functional>

namespace stms {

// Global worker count for parallel loops; 0 picks hardware concurrency.
void set_num_threads(int n);
int num_threads();

// Run fn(i) for i in [0, n). Work items are independent; assignment to
// workers does not affect results, so output is thread-count invariant
// as long as each item writes to its own slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace stms
