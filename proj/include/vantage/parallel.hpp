#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace vantage {

/// Resolves a user worker count: 0 means "all hardware threads".
inline unsigned resolve_workers(unsigned workers) {
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  return workers;
}

/// Runs body(i) for i in [0, n) on `workers` threads. Items are handed out in
/// fixed-size chunks from a shared counter; the first exception thrown by any
/// worker is rethrown on the calling thread after all workers join.
template <typename Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body, std::size_t chunk = 16) {
  workers = resolve_workers(workers);
  if (workers <= 1 || n <= chunk) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&] {
    try {
      for (;;) {
        const std::size_t begin = next.fetch_add(chunk);
        if (begin >= n) break;
        const std::size_t end = std::min(n, begin + chunk);
        for (std::size_t i = begin; i < end; ++i) body(i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(n);
    }
  };
  const unsigned spawned = static_cast<unsigned>(std::min<std::size_t>(workers, (n + chunk - 1) / chunk));
  std::vector<std::thread> pool;
  pool.reserve(spawned - 1);
  for (unsigned t = 1; t < spawned; ++t) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace vantage
