// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <functional>
#include <memory>

#include "slar/ht.hpp"

namespace slar {

// Pure on-demand tensor entries. eval must be deterministic for a fixed
// index and safe to invoke concurrently.
struct EntryAccessor {
  std::vector<i64> shape;
  std::function<cplx(std::span<const i64>)> eval;

  int dims() const { return static_cast<int>(shape.size()); }
};

// Entries of an HT tensor. The tensor is shared immutably.
EntryAccessor ht_accessor(std::shared_ptr<const HTTensor> t);

// target(idx) - approx(idx); the backbone of residual-driven pivoting.
EntryAccessor residual_accessor(EntryAccessor target, std::shared_ptr<const HTTensor> approx);

// Fixes `fixed.size()` consecutive modes starting at 0-based position
// `first_pos`; the result ranges over the remaining modes in order.
EntryAccessor restrict_modes(EntryAccessor base, int first_pos, std::vector<i64> fixed);

// Counts evaluations (relaxed) before forwarding.
EntryAccessor counted_accessor(EntryAccessor base, std::atomic<i64>* counter);

}  // namespace slar
