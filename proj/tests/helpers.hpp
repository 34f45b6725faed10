// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "slar/cross.hpp"
#include "slar/ht.hpp"
#include "slar/rng.hpp"

namespace slar::test {

inline double normal(CounterRng& rng) {
  // Box-Muller; the log argument is bounded away from zero.
  const double u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * M_PI * u2);
}

inline cplx cnormal(CounterRng& rng) { return {normal(rng), normal(rng)}; }

inline MatX random_matrix(i64 rows, i64 cols, CounterRng& rng) {
  MatX m(rows, cols);
  for (i64 c = 0; c < cols; ++c)
    for (i64 r = 0; r < rows; ++r) m(r, c) = cnormal(rng);
  return m;
}

inline VecX random_vector(i64 n, CounterRng& rng) {
  VecX v(n);
  for (i64 i = 0; i < n; ++i) v(i) = cnormal(rng);
  return v;
}

// Random HT tensor with node ranks drawn in [1, max_rank], clamped to what
// the tree admits.
inline HTTensor random_ht(TreePtr tree, const std::vector<i64>& shape, i64 max_rank, u64 seed) {
  CounterRng rng{CounterRng::mix(seed), 0};
  const DimensionTree& t = *tree;
  std::vector<i64> rank(static_cast<size_t>(t.num_nodes()), 1);
  for (int id : t.bottom_up()) {
    const auto& node = t.node(id);
    if (id == t.root()) {
      rank[static_cast<size_t>(id)] = 1;
    } else if (node.leaf()) {
      const i64 n = shape[static_cast<size_t>(node.modes[0] - 1)];
      rank[static_cast<size_t>(id)] = 1 + static_cast<i64>(rng.below(
                                              static_cast<u64>(std::min(max_rank, n))));
    } else {
      const i64 cap = std::min(max_rank, rank[static_cast<size_t>(node.left)] *
                                             rank[static_cast<size_t>(node.right)]);
      rank[static_cast<size_t>(id)] = 1 + static_cast<i64>(rng.below(static_cast<u64>(cap)));
    }
  }
  std::vector<MatX> frames(static_cast<size_t>(t.num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(t.num_nodes()));
  for (int id = 0; id < t.num_nodes(); ++id) {
    const auto& node = t.node(id);
    if (node.leaf()) {
      frames[static_cast<size_t>(id)] =
          random_matrix(shape[static_cast<size_t>(node.modes[0] - 1)],
                        rank[static_cast<size_t>(id)], rng);
    } else {
      transfers[static_cast<size_t>(id)] =
          random_matrix(rank[static_cast<size_t>(node.left)] * rank[static_cast<size_t>(node.right)],
                        rank[static_cast<size_t>(id)], rng);
    }
  }
  return HTTensor(tree, shape, std::move(frames), std::move(transfers));
}

inline double dense_norm(const DenseTensor& t) {
  double s = 0.0;
  for (const cplx& v : t.values) s += std::norm(v);
  return std::sqrt(s);
}

inline double dense_max_abs_diff(const DenseTensor& a, const DenseTensor& b) {
  double m = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) m = std::max(m, std::abs(a.values[i] - b.values[i]));
  return m;
}

inline double dense_frob_diff(const DenseTensor& a, const DenseTensor& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) s += std::norm(a.values[i] - b.values[i]);
  return std::sqrt(s);
}

// Iterates all multi-indices of `shape` in column-major order (mode 1
// fastest), calling fn(idx, position) with 1-based idx and 0-based position.
template <class F>
void for_each_index(const std::vector<i64>& shape, F&& fn) {
  MultiIndex idx(shape.size(), 1);
  const i64 total = product(shape);
  for (i64 pos = 0; pos < total; ++pos) {
    fn(idx, pos);
    for (size_t m = 0; m < shape.size(); ++m) {
      if (++idx[m] <= shape[m]) break;
      idx[m] = 1;
    }
  }
}

inline MultiIndex random_index(const std::vector<i64>& shape, CounterRng& rng) {
  MultiIndex idx(shape.size());
  for (size_t m = 0; m < shape.size(); ++m)
    idx[m] = 1 + static_cast<i64>(rng.below(static_cast<u64>(shape[m])));
  return idx;
}

}  // namespace slar::test
