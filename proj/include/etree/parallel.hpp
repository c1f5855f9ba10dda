#pragma once
#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace etree {

namespace detail {
inline std::atomic<int>& worker_slot() {
    static std::atomic<int> workers{0};  // 0 = use hardware concurrency
    return workers;
}
inline bool& in_parallel_region() {
    thread_local bool flag = false;
    return flag;
}
}  // namespace detail

inline int worker_count() {
    int w = detail::worker_slot().load(std::memory_order_relaxed);
    if (w <= 0) {
        const unsigned hc = std::thread::hardware_concurrency();
        w = hc > 0 ? static_cast<int>(hc) : 1;
    }
    return w;
}

inline void set_worker_count(int n) {
    detail::worker_slot().store(n, std::memory_order_relaxed);
}

// Runs body(i) for i in [0, n). Each index must write only to its own output
// slot; under that contract results are identical for any worker count.
// Nested calls run sequentially, so parallelism never compounds.
template <class F>
void parallel_for(std::size_t n, F&& body) {
    if (n == 0) return;
    const int workers = worker_count();
    if (workers <= 1 || n == 1 || detail::in_parallel_region()) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto run = [&]() {
        detail::in_parallel_region() = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) break;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!error) error = std::current_exception();
            }
        }
        detail::in_parallel_region() = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(nthreads - 1);
    for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace etree
