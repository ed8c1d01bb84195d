#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace isac {

/// Hardware parallelism, overridable through the ISAC_COOP_THREADS variable.
int default_thread_count();

/// Splits [0, n) into at most `threads` contiguous chunks and runs `body`
/// on each. Chunk boundaries depend only on (n, threads); outputs written
/// per-index are therefore identical for any thread count. Exceptions from
/// workers are rethrown (first one wins).
void parallel_for(int64_t n, int threads,
                  const std::function<void(int64_t begin, int64_t end, int chunk)>& body);

} // namespace isac
