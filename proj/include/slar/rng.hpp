// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slar/common.hpp"

namespace slar {

// Stateless counter-based generator (SplitMix64 finalizer over a key/counter
// pair). A draw is fully determined by (key, counter), so independent call
// sites can be handed independent streams without sharing mutable state.
// Streams are split by hashing a tag into the key.
struct CounterRng {
  u64 key = 0;
  u64 counter = 0;

  static u64 mix(u64 z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static u64 combine(u64 a, u64 b) { return mix(a + 0x632be59bd9b4e019ull * (b + 1)); }

  u64 next() { return mix(key ^ mix(counter++)); }

  // Unbiased draw in [0, n); n >= 1.
  u64 below(u64 n) {
    const u64 limit = n * ((~u64(0)) / n);
    u64 v = next();
    while (v >= limit) v = next();
    return v % n;
  }

  double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

  CounterRng split(u64 tag) const { return CounterRng{combine(key, tag), 0}; }
};

}  // namespace slar
