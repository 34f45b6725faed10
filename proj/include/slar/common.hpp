// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace slar {

using i64  = std::int64_t;
using u64  = std::uint64_t;
using cplx = std::complex<double>;

// Per-mode indices, 1-based throughout the public API.
using MultiIndex = std::vector<i64>;

inline constexpr i64 kUnboundedRank = std::numeric_limits<i64>::max() / 4;

// Invalid configuration (unsupported strategy, bad parameter combination).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline i64 product(std::span<const i64> v) {
  i64 p = 1;
  for (i64 x : v) p *= x;
  return p;
}

}  // namespace slar
