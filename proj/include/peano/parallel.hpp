#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace peano {

// Worker count: hardware concurrency capped by PEANO_CHAOS_THREADS.
inline int thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  long cap = hw;
  if (const char* s = std::getenv("PEANO_CHAOS_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(s, &end, 10);
    if (end != s && v >= 1) cap = std::min(cap, v);
  }
  return static_cast<int>(cap);
}

// Runs fn(i) for i in [0, n) over contiguous static chunks. Deterministic as
// long as fn(i) writes only to slot i of preallocated storage. The first
// exception (by chunk order) is rethrown.
template <class Fn>
void parallel_for(int n, Fn&& fn) {
  if (n <= 0) return;
  int t = std::min(thread_budget(), n);
  if (t <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errs(t);
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (int c = 0; c < t; ++c) {
    long lo = static_cast<long>(n) * c / t, hi = static_cast<long>(n) * (c + 1) / t;
    pool.emplace_back([&, c, lo, hi] {
      try {
        for (long i = lo; i < hi; ++i) fn(static_cast<int>(i));
      } catch (...) {
        errs[c] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

}  // namespace peano
