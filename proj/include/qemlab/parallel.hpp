#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qemlab {

/// Runs body(i) for i in [0, n) on up to `threads` workers with contiguous
/// static chunks. Results must be written to per-index slots; the first
/// exception thrown by any worker is rethrown.
template <class Body>
void parallel_for(long n, int threads, Body&& body) {
  if (n <= 0) return;
  const long workers = std::clamp<long>(threads, 1, n);
  if (workers == 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (long w = 0; w < workers; ++w) {
    const long begin = n * w / workers;
    const long end = n * (w + 1) / workers;
    pool.emplace_back([&, begin, end] {
      try {
        for (long i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace qemlab
