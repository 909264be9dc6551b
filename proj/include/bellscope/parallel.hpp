#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bellscope {

// BELLSCOPE_THREADS caps the pool; defaults to the hardware concurrency.
inline int worker_count() {
    int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("BELLSCOPE_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    return hw;
}

// Calls f(i) for every i in [0, n). Work is split in contiguous chunks;
// callers write results per index so the outcome never depends on scheduling.
template <class F>
void parallel_for(std::size_t n, F&& f, int threads = 0) {
    if (threads <= 0) threads = worker_count();
    std::size_t nt = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nt; ++t) {
        std::size_t lo = n * t / nt, hi = n * (t + 1) / nt;
        pool.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lk(mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace bellscope
