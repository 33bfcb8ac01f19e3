#pragma once
// Deterministic work sharing across alpha levels. Each index is processed by
// exactly one worker and writes disjoint output, so results are bitwise
// independent of the thread count.

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace ubsde {

inline void run_over_levels(std::size_t count, std::size_t threads,
                            const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (std::size_t j = 0; j < count; ++j) fn(j);
        return;
    }
    const std::size_t workers = std::min(threads, count);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (;;) {
                const std::size_t j = next.fetch_add(1);
                if (j >= count) return;
                try {
                    fn(j);
                } catch (...) {
                    errors[w] = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace ubsde
