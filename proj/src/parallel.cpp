// Copyright The mvseg Authors
// SPDX-License-Identifier: Apache-2.0

#include "mvseg/parallel.hpp"

namespace mvseg {
namespace {
std::atomic<int> g_workers{0};
}

void set_worker_count(int n) { g_workers.store(n < 0 ? 0 : n); }

int worker_count() {
  const int n = g_workers.load();
  if (n > 0) return n;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace mvseg
