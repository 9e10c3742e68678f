#pragma once

#include <functional>

namespace factgs {

/// Worker count to actually use: `requested` when positive, otherwise the
/// hardware concurrency (never less than 1).
int resolve_threads(int requested);

/// Splits [begin, end) into one contiguous chunk per worker and runs
/// fn(worker_index, chunk_begin, chunk_end) on each worker. Chunk boundaries
/// depend only on the range and the worker count, so per-worker results are
/// reproducible for a fixed thread count. Runs inline when one worker suffices.
void parallel_chunks(int begin, int end, int threads,
                     const std::function<void(int, int, int)>& fn);

} // namespace factgs
