#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace riskctl {

// Worker count from RISKCTL_WORKERS, or 1 when unset or malformed.
inline std::size_t workers_from_env() {
    const char* raw = std::getenv("RISKCTL_WORKERS");
    if (raw == nullptr) return 1;
    try {
        const long v = std::stol(raw);
        return v > 0 ? static_cast<std::size_t>(v) : 1;
    } catch (...) {
        return 1;
    }
}

// Runs body(i) for i in [0, count) on up to `workers` threads. Indices are
// assigned in contiguous blocks; callers write into per-index slots, so any
// reduction done afterwards in index order is independent of the worker count.
// The first exception thrown by any body is rethrown on the calling thread.
template <typename Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace riskctl
