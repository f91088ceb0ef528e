#pragma once

#include <cstddef>
#include <functional>

namespace aewm::par {

// Number of workers to use when the caller passes 0 (hardware concurrency,
// at least 1).
int resolve_workers(int requested);

// Runs fn(i) for i in [begin, end) on up to `workers` threads. Work items
// must write results only to their own slot so the output is independent of
// scheduling. Exceptions are captured and rethrown on the calling thread.
void parallel_for(std::size_t begin, std::size_t end, int workers,
                  const std::function<void(std::size_t)>& fn);

} // namespace aewm::par
