// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "slar/common.hpp"

namespace slar {

// Worker threads used by parallel_for. Defaults to the OpenMP runtime value;
// the SLAR_THREADS environment variable overrides it, and 1 selects the
// serial path. Results never depend on the thread count: every iteration
// writes only its own output slot.
int parallel_threads();
void set_parallel_threads(int n);

namespace detail {
void parallel_for_impl(i64 n, int threads, const std::function<void(i64)>& fn);
}

template <class F>
void parallel_for(i64 n, F&& fn) {
  const int nt = parallel_threads();
  if (nt <= 1 || n < 4) {
    for (i64 i = 0; i < n; ++i) fn(i);
    return;
  }
  detail::parallel_for_impl(n, nt, std::function<void(i64)>(std::forward<F>(fn)));
}

}  // namespace slar
