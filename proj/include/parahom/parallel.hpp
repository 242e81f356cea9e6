#pragma once

#include <cstddef>
#include <functional>

namespace parahom {

// Worker count: PARAHOM_THREADS if set and positive, else the hardware
// concurrency (0 or unset means auto).
int thread_count();

// Runs fn(0..count-1) on up to thread_count() threads. Nested calls run
// serially. If any task throws, the exception of the lowest failing index is
// rethrown after all tasks finish, so failures are deterministic.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace parahom
