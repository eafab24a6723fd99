#pragma once

// Deterministic task parallelism: work items are indexed, each item writes
// only its own slot, and the thread count never affects results. Thread
// count comes from SSK_THREADS (default: hardware concurrency, capped).

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ssk {

inline int thread_count() {
    if (const char* env = std::getenv("SSK_THREADS")) {
        const int k = std::atoi(env);
        if (k >= 1) return k;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

// Run f(i) for i in [0, n). f must only touch state owned by index i.
template <typename F>
void parallel_for_index(std::size_t n, F&& f, int threads = thread_count()) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr first_error;
    std::mutex err_mutex;
    const int k = static_cast<int>(std::min<std::size_t>(threads, n));
    pool.reserve(k);
    for (int t = 0; t < k; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace ssk
