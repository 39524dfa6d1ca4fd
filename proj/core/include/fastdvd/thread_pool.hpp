#pragma once

#include <cstddef>
#include <functional>

namespace fastdvd {

// Number of worker threads used by the kernels. Defaults to the value of
// the FASTDVD_THREADS environment variable, or hardware concurrency.
int num_threads();

// Override the worker count (recreates the pool). n < 1 resets to default.
void set_num_threads(int n);

// Runs fn(i) for i in [0, count). Work is split into the exact same units
// regardless of the worker count, so outputs of deterministic tasks are
// bit-identical whether the pool has 1 thread or 16. fn must only write to
// state owned by task i.
void parallel_tasks(std::size_t count, const std::function<void(std::size_t)>& fn);

} // namespace fastdvd
