#pragma once

#include <cstdint>
#include <functional>

namespace ramp {

// Global worker count for parallel_for (>= 1, includes the calling thread).
int worker_count();
void set_worker_count(int n);

// Runs fn(tile_begin, tile_end) over a partition of [begin, end).
// The partition depends only on the range, never on the worker count, and
// tiles never overlap, so any kernel writing only to its tile produces
// bit-identical output for every worker count. Blocks until all tiles ran.
// Reconfiguring workers while a parallel_for is in flight is not supported.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace ramp
