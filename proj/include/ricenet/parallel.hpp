#pragma once

#include <cstddef>
#include <functional>

namespace ricenet {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Work items must write
// to disjoint outputs; results are then independent of scheduling. The first
// exception thrown by any item is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

} // namespace ricenet
