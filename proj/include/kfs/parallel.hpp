#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kfs {

inline int default_workers() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(trial) for trial in [0, trials) on `workers` threads. Trials are
// independent work units; results must be written to per-trial slots so the
// outcome does not depend on scheduling.
inline void for_each_trial(std::uint64_t trials, int workers,
                           const std::function<void(std::uint64_t)>& fn) {
    if (workers < 1) workers = 1;
    if (workers == 1 || trials <= 1) {
        for (std::uint64_t t = 0; t < trials; ++t) fn(t);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::uint64_t t = next.fetch_add(1, std::memory_order_relaxed);
            if (t >= trials) return;
            try {
                fn(t);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(trials, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace kfs
