#pragma once

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace refref {

/// Worker cap shared by renderer and trainer. 0 = hardware concurrency.
void set_thread_count(int n);
int thread_count();

/// Runs fn(begin, end, worker_index) over a static contiguous partition of
/// [0, n). The partition depends only on n and the worker count, so any
/// per-worker accumulation merged in worker order is deterministic.
void parallel_for_chunks(int64_t n, const std::function<void(int64_t, int64_t, int)>& fn);

/// Convenience element-wise form.
void parallel_for(int64_t n, const std::function<void(int64_t)>& fn);

}  // namespace refref
