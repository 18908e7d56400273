#pragma once

#include <cstddef>
#include <functional>

namespace citysplat {

/// Worker count used when a caller passes 0: the CITYSPLAT_THREADS environment
/// variable if set, else std::thread::hardware_concurrency().
unsigned default_thread_count();

/// Runs fn(i) for i in [0, n) on up to `threads` workers with dynamic
/// scheduling. Returns after every call has completed; the first exception
/// thrown by fn is rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

} // namespace citysplat
