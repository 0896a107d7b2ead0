#pragma once

#include <cstddef>
#include <functional>

namespace crackflux {

// Worker count from CRACKFLUX_THREADS, else the hardware concurrency.
int thread_count();

// Runs f(i) for i in [0, n). Each index writes its own result slot, so results do not depend on
// the thread count. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace crackflux
