// SPDX-License-Identifier: Apache-2.0
#include "slar/parallel.hpp"

#include <atomic>
#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace slar {

namespace {

int default_threads() {
  if (const char* env = std::getenv("SLAR_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::atomic<int> g_threads{0};

}  // namespace

int parallel_threads() {
  int n = g_threads.load(std::memory_order_relaxed);
  if (n == 0) {
    n = default_threads();
    g_threads.store(n, std::memory_order_relaxed);
  }
  return n;
}

void set_parallel_threads(int n) { g_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }

namespace detail {

void parallel_for_impl(i64 n, int threads, const std::function<void(i64)>& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (i64 i = 0; i < n; ++i) fn(i);
#else
  (void)threads;
  for (i64 i = 0; i < n; ++i) fn(i);
#endif
}

}  // namespace detail

}  // namespace slar
