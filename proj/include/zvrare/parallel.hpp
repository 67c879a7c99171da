#pragma once

#include <cstddef>
#include <functional>

namespace zvrare {

/// Worker count: explicit value if positive, else ZVRARE_THREADS, else
/// hardware concurrency.
int resolve_threads(int requested);

/// Runs body(i) for i in [0, count) on `threads` workers. The first exception
/// thrown by any body is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace zvrare
