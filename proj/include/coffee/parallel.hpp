#pragma once

#include <cstddef>
#include <functional>

namespace coffee {

// Runs body(i) for i in [0, n) on up to hardware_concurrency threads.
// Nested calls run sequentially on the calling thread. The first exception
// (by index) is rethrown after all workers finish. Callers write results by
// index, so output never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace coffee
