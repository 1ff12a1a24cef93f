#pragma once

#include <cstddef>
#include <functional>

namespace spectral_edge {

// Worker count: SPECTRAL_EDGE_THREADS if set and positive, otherwise the
// hardware concurrency (at least 1).
std::size_t default_worker_count();

// Runs body(i) for i in [0, count) on up to `workers` threads. Indices are
// handed out dynamically; callers write results into slot i so the outcome
// never depends on scheduling. The first exception thrown is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                  std::size_t workers = default_worker_count());

}  // namespace spectral_edge
