#include "factgs/parallel.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace factgs {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_chunks(int begin, int end, int threads,
                     const std::function<void(int, int, int)>& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    const int workers = std::min(resolve_threads(threads), count);
    if (workers == 1) {
        fn(0, begin, end);
        return;
    }
    const int chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int lo = begin + w * chunk;
        const int hi = std::min(lo + chunk, end);
        pool.emplace_back([&fn, w, lo, hi] { fn(w, lo, hi); });
    }
    for (auto& t : pool) t.join();
}

} // namespace factgs
