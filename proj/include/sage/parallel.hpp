#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sage {

/// Number of workers to use when the caller passes threads <= 0.
inline int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(i) for i in [0, count) on up to `threads` workers with a static
/// block partition. fn must only write to slot i; the first exception is rethrown.
template <class Fn>
void parallel_for(std::ptrdiff_t count, int threads, Fn&& fn) {
  if (threads <= 0) threads = default_threads();
  const std::ptrdiff_t workers = std::min<std::ptrdiff_t>(threads, count);
  if (workers <= 1) {
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (std::ptrdiff_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::ptrdiff_t begin = count * w / workers;
      const std::ptrdiff_t end = count * (w + 1) / workers;
      try {
        for (std::ptrdiff_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(guard);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sage
