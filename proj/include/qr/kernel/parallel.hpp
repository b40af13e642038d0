#pragma once

#include <cstddef>
#include <functional>

namespace qr::kernel {

/// Worker count from QR_THREADS, else hardware concurrency (at least 1).
std::size_t thread_count();

/// Runs fn(begin, end) over contiguous chunks of [0, n). Chunks are disjoint,
/// so results are identical for any thread count as long as fn writes only
/// to its own range. Calls made from inside a worker run inline. The first
/// exception (lowest chunk) is rethrown after all chunks finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_chunk = 1);

}  // namespace qr::kernel
