#pragma once

#include <cstddef>
#include <functional>

namespace maecho {

/// Worker cap: ECHO_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(0) ... fn(count - 1) on up to worker_count() threads. Tasks must
/// write to disjoint state; the first exception thrown is rethrown here.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace maecho
