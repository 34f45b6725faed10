// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slar/accessor.hpp"
#include "slar/rng.hpp"

namespace slar {

struct AcaParams {
  double eps_base = 1e-6;  // relative tolerance driving the final truncation
  double gamma = 0.1;      // per-level decay of the pivot tolerance
  i64 r_min = 1;
  i64 r_max = kUnboundedRank;
  i64 r_min_leaf = 0;   // optional leaf-rank floor (0: use r_min)
  i64 r_hash_min = 1;   // minimum number of corrections per subtree
  i64 r_hash_max = 0;   // maximum corrections (0: auto, 2x the rank cap)
  u64 rng_seed = 0;

  void validate() const;
  RankLimits rank_limits() const;
};

// Diagnostics collected across one construction. accessor_evals is safe to
// bump from concurrent evaluations; the rest is touched only by the
// orchestration thread.
struct AcaStats {
  std::atomic<i64> accessor_evals{0};
  std::vector<double> root_pivots;  // |pivot| history of the top-level loop
  bool rank_saturated = false;      // hit the correction cap somewhere
  bool pool_exhausted = false;      // ran out of unused pivot rows/columns
};

// s = 3^order, m = order - 1: sample count and refinement rounds used by the
// pivot search at a node of the given order.
std::pair<i64, i64> sampling_params(int order);

// gamma^(depth(tree) - depth(subtree at node)) * eps_base * max_estimate.
double pivot_tolerance(const AcaParams& params, const DimensionTree& tree, int node,
                       double max_estimate);

struct PivotResult {
  cplx value{};
  MultiIndex index;  // multi-index over the node's modes (local, 1-based)
  bool exhausted = false;
};

// Tracks selected linear indices over a child block.
struct IndexPool {
  i64 total = 0;
  std::vector<i64> used;  // sorted, 1-based

  i64 remaining() const { return total - static_cast<i64>(used.size()); }
  void insert(i64 v);
  bool contains(i64 v) const;
  i64 unused_at(i64 rank) const;  // rank-th (0-based) unused value
};

// Residual-guided pivot search over the subtree rooted at `node` of `tree`.
// The accessor covers exactly that node's modes. Index pools are consulted
// and updated only at recursion depth 0 and may be null below.
PivotResult recursive_pivot_search(const EntryAccessor& residual, const DimensionTree& tree,
                                   int node, IndexPool* used_left, IndexPool* used_right,
                                   const MultiIndex* candidate, int depth, CounterRng rng);

struct MatrixAcaResult {
  std::vector<i64> rows, cols;  // pivot rows/columns in selection order
  MatX col_factors;             // N1 x k
  MatX row_factors;             // k x N2; approximation = col_factors * row_factors
  std::vector<cplx> pivots;
  bool saturated = false;
};

// Greedy CUR-equivalent factorization of a 2-mode accessor. Stops when the
// pivot magnitude falls below tol or max_rank corrections were applied.
MatrixAcaResult matrix_aca(const EntryAccessor& acc, double tol, i64 max_rank, u64 rng_seed = 0,
                           AcaStats* stats = nullptr);

// Hierarchical Tucker adaptive cross approximation of an accessor over the
// given dimension tree.
HTTensor htaca(const EntryAccessor& acc, TreePtr tree, const AcaParams& params,
               AcaStats* stats = nullptr);

}  // namespace slar
