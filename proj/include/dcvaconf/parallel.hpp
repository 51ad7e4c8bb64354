#ifndef DCVACONF_PARALLEL_HPP
#define DCVACONF_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dcvaconf {

namespace detail {
inline std::atomic<std::size_t>& thread_limit() {
    static std::atomic<std::size_t> limit{0};
    return limit;
}

// Set while a thread runs a parallel_for body; nested loops then run inline.
inline bool& inside_worker() {
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

/// Upper bound on worker threads used by library loops. 0 means one per
/// hardware thread. Results never depend on this value.
inline void set_max_threads(std::size_t n) { detail::thread_limit().store(n); }

inline std::size_t max_threads() {
    std::size_t n = detail::thread_limit().load();
    if (n == 0) n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return n;
}

/// Calls fn(i) for every i in [begin, end), splitting the range into
/// contiguous chunks. fn must only write state owned by index i.
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn, std::size_t min_chunk = 1) {
    if (end <= begin) return;
    const std::size_t count = end - begin;
    const std::size_t workers =
        std::min(max_threads(), std::max<std::size_t>(1, count / std::max<std::size_t>(1, min_chunk)));
    if (workers <= 1 || detail::inside_worker()) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }

    std::exception_ptr failure;
    std::mutex failure_mutex;
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            detail::inside_worker() = true;
            try {
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
            detail::inside_worker() = false;
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace dcvaconf

#endif
