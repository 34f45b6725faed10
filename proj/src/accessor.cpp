// SPDX-License-Identifier: Apache-2.0
#include "slar/accessor.hpp"

#include <array>

namespace slar {

EntryAccessor ht_accessor(std::shared_ptr<const HTTensor> t) {
  EntryAccessor acc;
  acc.shape = t->shape();
  acc.eval = [t = std::move(t)](std::span<const i64> idx) {
    thread_local EntryWorkspace ws;
    return ht_entry(*t, idx, ws);
  };
  return acc;
}

EntryAccessor residual_accessor(EntryAccessor target, std::shared_ptr<const HTTensor> approx) {
  require(target.shape == approx->shape(), "residual_accessor: shapes differ");
  EntryAccessor acc;
  acc.shape = target.shape;
  acc.eval = [target = std::move(target.eval), approx = std::move(approx)](std::span<const i64> idx) {
    thread_local EntryWorkspace ws;
    return target(idx) - ht_entry(*approx, idx, ws);
  };
  return acc;
}

EntryAccessor restrict_modes(EntryAccessor base, int first_pos, std::vector<i64> fixed) {
  constexpr int kMaxModes = 32;
  const int d = base.dims();
  const int k = static_cast<int>(fixed.size());
  require(first_pos >= 0 && first_pos + k <= d, "restrict_modes: block out of range");
  require(d <= kMaxModes, "restrict_modes: mode count exceeds the supported maximum");
  EntryAccessor acc;
  acc.shape.reserve(static_cast<size_t>(d - k));
  for (int m = 0; m < d; ++m)
    if (m < first_pos || m >= first_pos + k) acc.shape.push_back(base.shape[static_cast<size_t>(m)]);
  acc.eval = [base = std::move(base.eval), first_pos, k, d,
              fixed = std::move(fixed)](std::span<const i64> idx) {
    std::array<i64, kMaxModes> merged;
    int src = 0;
    for (int m = 0; m < d; ++m) {
      if (m >= first_pos && m < first_pos + k)
        merged[static_cast<size_t>(m)] = fixed[static_cast<size_t>(m - first_pos)];
      else
        merged[static_cast<size_t>(m)] = idx[static_cast<size_t>(src++)];
    }
    return base(std::span<const i64>(merged.data(), static_cast<size_t>(d)));
  };
  return acc;
}

EntryAccessor counted_accessor(EntryAccessor base, std::atomic<i64>* counter) {
  EntryAccessor acc;
  acc.shape = base.shape;
  acc.eval = [base = std::move(base.eval), counter](std::span<const i64> idx) {
    counter->fetch_add(1, std::memory_order_relaxed);
    return base(idx);
  };
  return acc;
}

}  // namespace slar
