#pragma once

#include <cstddef>
#include <functional>

namespace handshape {

/// Runs task(i) for i in [0, n) on up to `jobs` threads. Tasks must write
/// only to their own output slots. If tasks throw, the exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& task);

}  // namespace handshape
