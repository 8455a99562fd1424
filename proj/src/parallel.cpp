#include "refref/parallel.hpp"

#include <algorithm>
#include <atomic>

namespace refref {

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_count(int n) { g_threads.store(n < 0 ? 0 : n); }

int thread_count() {
    int n = g_threads.load();
    if (n > 0) return n;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_chunks(int64_t n, const std::function<void(int64_t, int64_t, int)>& fn) {
    if (n <= 0) return;
    int workers = std::min<int64_t>(thread_count(), n);
    if (workers <= 1) {
        fn(0, n, 0);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        int64_t begin = n * w / workers;
        int64_t end = n * (w + 1) / workers;
        pool.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
    }
    for (auto& t : pool) t.join();
}

void parallel_for(int64_t n, const std::function<void(int64_t)>& fn) {
    parallel_for_chunks(n, [&fn](int64_t begin, int64_t end, int) {
        for (int64_t i = begin; i < end; ++i) fn(i);
    });
}

}  // namespace refref
