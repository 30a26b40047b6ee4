#pragma once

#include <cstddef>
#include <functional>

namespace moca {

// Runs fn(0..n) across up to `threads` workers (0 = hardware concurrency,
// 1 = inline). Work items must be independent; results must be written to
// per-index slots so the outcome is identical for any thread count.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn);

int resolve_threads(int configured);

}  // namespace moca
