#pragma once

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace tvcsl {

// Deterministic parallel map: workers pull indices from a shared counter but
// every result lands in the slot its index owns, so output is invariant to
// scheduling and thread count. fn must not throw across the thread boundary
// uncaught; callers capture failures into per-index slots.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, count));
    if (threads == 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace tvcsl
