#pragma once

#include <cstddef>
#include <functional>

namespace sigmaridge {

/// Worker count: SIGMARIDGE_THREADS when set (>= 1), else hardware concurrency.
std::size_t max_threads();

/// Runs body(i) for i in [0, count). Each index is processed exactly once;
/// callers write results by index so output does not depend on scheduling.
/// Nested calls run serially on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace sigmaridge
