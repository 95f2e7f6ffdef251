#pragma once

#include <cstddef>
#include <functional>

namespace osslc {

// Runs task(i) for i in [0, n) on up to `jobs` threads. Results must be written
// by index so the outcome does not depend on scheduling. The first exception
// thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task);

}  // namespace osslc
