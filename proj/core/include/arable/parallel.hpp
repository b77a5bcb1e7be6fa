#pragma once

#include <cstddef>
#include <functional>

namespace arable {

// Process-wide cap on worker threads. 0 means hardware concurrency.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Runs fn(chunk) for chunk in [0, n_chunks). Chunks are assigned statically
// (chunk k goes to worker k % workers), so callers that write per-chunk
// results and reduce them in chunk order get thread-count independent output.
void parallel_chunks(std::size_t n_chunks, const std::function<void(std::size_t)>& fn);

// Convenience: split [0, n) into fixed-size blocks and call fn(begin, end).
void parallel_range(std::size_t n, std::size_t block,
                    const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace arable
