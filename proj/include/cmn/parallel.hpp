#pragma once

#include <cstddef>
#include <functional>

namespace cmn {

// Worker count: hardware concurrency, capped by the CMN_THREADS environment variable.
unsigned worker_count();

// Calls body(i) for i in [0, n). Indices are handed out in contiguous chunks,
// so callers that write results by index get a schedule-independent outcome.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace cmn
