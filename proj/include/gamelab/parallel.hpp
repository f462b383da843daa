#ifndef GAMELAB_PARALLEL_HPP
#define GAMELAB_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gamelab {

// Process-wide default worker count for parallel sweeps. Numerical results
// must never depend on this value: workers only ever write disjoint output
// slots and every reduction happens after the join, in a fixed order.
inline std::atomic<int>& thread_count_slot() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_default_threads(int n) { thread_count_slot().store(n < 1 ? 1 : n); }
inline int default_threads() { return thread_count_slot().load(); }

// Runs fn(begin, end) over a blocked partition of [0, n). If workers throw,
// the exception from the lowest block is rethrown after the join, so error
// reporting does not depend on thread scheduling.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (n == 0) return;
    const std::size_t nthreads =
        std::min<std::size_t>(static_cast<std::size_t>(threads < 1 ? 1 : threads), n);
    if (nthreads <= 1) {
        fn(std::size_t{0}, n);
        return;
    }
    const std::size_t chunk = (n + nthreads - 1) / nthreads;
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nthreads);
    pool.reserve(nthreads);
    for (std::size_t k = 0; k < nthreads; ++k) {
        const std::size_t lo = k * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, &errors, k, lo, hi] {
            try {
                fn(lo, hi);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    parallel_for(n, default_threads(), std::forward<Fn>(fn));
}

}  // namespace gamelab

#endif
