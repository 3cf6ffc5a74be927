#ifndef GSAREG_THREADING_HPP
#define GSAREG_THREADING_HPP

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gsareg {

// Runs fn(0..n-1) across up to n_threads workers. Callers must write results
// only into per-index slots; aggregation stays a serial fold afterwards, so
// outputs are identical for every thread count.
template <class Fn>
void parallel_for(int n, int n_threads, Fn&& fn) {
    if (n <= 0) return;
    if (n_threads <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        n_threads = hw > 0 ? static_cast<int>(hw) : 1;
    }
    n_threads = std::min(n_threads, n);
    if (n_threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (;;) {
            const int i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n || failed.load(std::memory_order_relaxed)) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace gsareg

#endif
