#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace crsim {

/// Run fn(i) for i in [0, n) on up to `jobs` threads. Each index is visited
/// exactly once; the first exception thrown by any worker is rethrown after
/// all workers have joined.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace crsim
