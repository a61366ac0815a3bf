#pragma once

#include <cstddef>
#include <functional>

namespace vscene {

/// Number of workers used when `threads` is 0: the hardware concurrency.
unsigned resolve_threads(unsigned threads);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Each index runs exactly once; the
/// first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace vscene
