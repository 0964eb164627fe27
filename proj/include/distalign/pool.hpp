// Copyright 2026 The dist-align Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DISTALIGN_POOL_HPP
#define DISTALIGN_POOL_HPP

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace distalign {

/// Runs fn(0..n-1) on a bounded pool. Results must be written to
/// index-addressed slots by the callable, so the outcome is independent of
/// scheduling. The first exception wins and is rethrown after all workers
/// finish.
inline void parallelFor(int workers, size_t n,
                        const std::function<void(size_t)>& fn) {
  if (n == 0) return;
  size_t width = static_cast<size_t>(workers < 1 ? 1 : workers);
  if (width > n) width = n;
  if (width == 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto work = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(width);
  for (size_t w = 0; w < width; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace distalign

#endif  // DISTALIGN_POOL_HPP
