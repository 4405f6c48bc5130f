#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace kinetic {

/// Worker count: KINETIC_THREADS if set and positive, else hardware concurrency.
int worker_count();

/// Runs body(lo, hi) over contiguous chunks covering [0, n), one per worker.
/// The body must only write to locations owned by its indices; reductions are
/// done by the caller in index order so results do not depend on the worker
/// count.
template <class Body>
void parallel_chunks(std::size_t n, Body&& body) {
    const std::size_t workers = static_cast<std::size_t>(worker_count());
    if (workers <= 1 || n < 2 * workers) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = lo + chunk < n ? lo + chunk : n;
        if (lo < hi) pool.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    body(std::size_t{0}, chunk < n ? chunk : n);
    for (auto& t : pool) t.join();
}

/// Runs body(i) for every i in [0, n); same ownership rules as above.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
    parallel_chunks(n, [&body](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) body(i);
    });
}

}  // namespace kinetic
