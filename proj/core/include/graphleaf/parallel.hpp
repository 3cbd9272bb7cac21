#pragma once

#include <cstddef>
#include <functional>

namespace graphleaf {

/// Worker cap. Initialised from GRAPHLEAF_THREADS (0 or unset = hardware
/// concurrency) on first use.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs `body(begin, end)` over a static partition of [0, n). Each index is
/// visited by exactly one worker, so results are independent of the
/// thread count as long as `body` only writes to its own indices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 1);

}  // namespace graphleaf
