#pragma once

#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace mcm {

inline int default_jobs() {
    if (const char* env = std::getenv("MCM_JOBS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Runs fn(row) for every row in [0, rows). Rows are dealt to workers in
// fixed interleaved stripes, each worker writes its own rows only, so the
// result is identical for any worker count.
template <typename Fn>
void parallel_rows(int rows, int jobs, Fn&& fn) {
    if (jobs < 1) jobs = 1;
    if (jobs == 1 || rows <= 1) {
        for (int r = 0; r < rows; ++r) fn(r);
        return;
    }
    int workers = std::min(jobs, rows);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (int r = w; r < rows; r += workers) fn(r);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace mcm
