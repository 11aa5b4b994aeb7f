// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mvseg {

/// Process-wide worker count used by the numeric kernels. 0 selects
/// std::thread::hardware_concurrency(). Chunk boundaries never depend on the
/// worker count, so results are bit-identical for any setting.
void set_worker_count(int n);
int worker_count();

inline std::size_t chunk_count(std::size_t n, std::size_t chunk) {
  return chunk == 0 ? 0 : (n + chunk - 1) / chunk;
}

/// Calls fn(begin, end, chunk_index) for each fixed-size chunk of [0, n).
template <typename Fn>
void parallel_chunks(std::size_t n, std::size_t chunk, Fn&& fn) {
  const std::size_t chunks = chunk_count(n, chunk);
  const auto workers =
      static_cast<std::size_t>(std::max(1, std::min<int>(worker_count(), static_cast<int>(chunks))));
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c * chunk, std::min(n, (c + 1) * chunk), c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        fn(c * chunk, std::min(n, (c + 1) * chunk), c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace mvseg
