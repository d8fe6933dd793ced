#pragma once

#include <cstddef>
#include <functional>

namespace treadkit {

/// Worker count used when a caller passes 0. Starts at the hardware concurrency.
unsigned default_threads();
void set_default_threads(unsigned n);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = default_threads()).
/// Indices are handed out dynamically; fn must only write to slot i of its outputs.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

} // namespace treadkit
