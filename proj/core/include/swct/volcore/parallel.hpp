#pragma once

#include <cstddef>
#include <functional>

namespace swct {

/// Logical core count (at least 1).
int default_jobs();

/// Runs fn(0..n-1) on up to `jobs` worker threads. The first exception thrown
/// by any task is rethrown after all workers stop.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace swct
