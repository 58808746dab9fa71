#pragma once

#include <cstddef>
#include <functional>

namespace lotflow {

// Thread count resolution: explicit > LOTFLOW_THREADS env > hardware concurrency.
int resolve_threads(int requested = 0);

// Runs fn(begin, end) over [0, n) split into contiguous chunks, one chunk per
// worker. Chunk boundaries depend only on (n, threads), so deterministic
// per-chunk reductions stay stable for a fixed thread count; callers that
// need bit-stable results across thread counts must reduce by index.
void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace lotflow
