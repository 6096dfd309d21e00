#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace blockspec {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Each index writes only
/// its own output slot, so callers get an index-ordered result regardless of
/// scheduling. The first exception thrown by any task is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, jobs);
  if (jobs == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  const auto count = std::min<std::size_t>(jobs, n);
  std::vector<std::thread> pool;
  pool.reserve(count);
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

/// Index-ordered map.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, unsigned jobs, Fn&& fn) {
  std::vector<T> out(n);
  parallel_for(n, jobs, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace blockspec
