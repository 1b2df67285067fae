#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace pcreg {

// Runs fn(0..count-1) on up to `threads` workers (0 = hardware concurrency).
// Tasks must write only to their own slots; callers reduce results in index
// order afterwards, so the outcome does not depend on the schedule.
inline void parallel_ordered(std::size_t count, int threads,
                             const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace pcreg
