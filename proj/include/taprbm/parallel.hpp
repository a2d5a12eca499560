#pragma once

#include <cstddef>
#include <functional>

namespace taprbm {

/// Worker count resolution: explicit request > TAPRBM_THREADS > hardware.
std::size_t resolve_thread_count(std::size_t requested = 0);

/// Runs fn(i) for i in [0, n) across at most `threads` workers. Results must
/// be written to index-addressed slots by the caller; chunk assignment is
/// deterministic. The first exception thrown by any worker is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace taprbm
