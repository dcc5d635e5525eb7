#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace wiplab {

/// Runs fn(i) for i in [0, count) on up to `width` threads. Each index is
/// processed exactly once; callers write results into slot i, so the merged
/// output does not depend on the width.
template <class Fn>
void parallel_for(std::size_t count, int width, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, width));
  if (workers == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  const std::size_t used = std::min(workers, count);
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += used) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace wiplab
