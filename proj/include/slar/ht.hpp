// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include "slar/tree.hpp"

namespace slar {

using MatX = Eigen::MatrixXcd;
using VecX = Eigen::VectorXcd;

// Dense tensor with column-major layout (mode 1 fastest). Reconstruction
// target for oracles and small-grid tables; never used on production paths
// beyond the configurable size cap.
struct DenseTensor {
  std::vector<i64> shape;
  std::vector<cplx> values;

  i64 size() const { return static_cast<i64>(values.size()); }
  i64 linear(std::span<const i64> idx) const;
  cplx at(std::span<const i64> idx) const { return values[static_cast<size_t>(linear(idx))]; }
  cplx& at(std::span<const i64> idx) { return values[static_cast<size_t>(linear(idx))]; }
};

// Hierarchical Tucker decomposition over a dimension tree: one frame matrix
// per leaf (N_mu x r), one matricized transfer per non-leaf node
// (r_left*r_right x r, column-major with the left child fastest), root rank
// fixed to 1. Values are immutable after construction; instances are safe to
// share across threads.
class HTTensor {
 public:
  HTTensor() = default;
  HTTensor(TreePtr tree, std::vector<i64> shape, std::vector<MatX> leaf_frames,
           std::vector<MatX> transfers);

  const DimensionTree& tree() const { return *tree_; }
  const TreePtr& tree_ptr() const { return tree_; }
  const std::vector<i64>& shape() const { return shape_; }
  int dims() const { return tree_->num_modes(); }

  // Per-node blocks, indexed by node id. frame(id) is valid for leaves,
  // transfer(id) for non-leaf nodes.
  const MatX& frame(int node_id) const { return leaf_frames_[static_cast<size_t>(node_id)]; }
  const MatX& transfer(int node_id) const { return transfers_[static_cast<size_t>(node_id)]; }

  i64 rank(int node_id) const;
  std::vector<i64> ranks() const;
  i64 max_rank() const;
  i64 max_interior_rank() const;  // over non-leaf, non-root nodes plus root children
  i64 storage_count() const;      // stored scalar count over all frames/transfers

  bool valid() const { return tree_ != nullptr; }

 private:
  TreePtr tree_;
  std::vector<i64> shape_;
  std::vector<MatX> leaf_frames_;
  std::vector<MatX> transfers_;
};

// Scratch space for repeated entry evaluation on tensors with one tree.
struct EntryWorkspace {
  std::vector<VecX> node_vec;
};

cplx ht_entry(const HTTensor& t, std::span<const i64> idx);
cplx ht_entry(const HTTensor& t, std::span<const i64> idx, EntryWorkspace& ws);

DenseTensor ht_full(const HTTensor& t, i64 size_cap = 10'000'000);

HTTensor ht_add(const HTTensor& a, const HTTensor& b);
HTTensor ht_scale(const HTTensor& a, cplx c);

double ht_norm(const HTTensor& t);

// Leaves-to-root orthogonalization: all leaf frames and non-root transfers
// get orthonormal columns; the root transfer carries the magnitude.
HTTensor ht_orthogonalize(const HTTensor& t);

struct RankLimits {
  i64 leaf_min = 1;
  i64 leaf_max = kUnboundedRank;
  i64 interior_min = 1;
  i64 interior_max = kUnboundedRank;

  static RankLimits uniform(i64 r_min, i64 r_max) { return {r_min, r_max, r_min, r_max}; }
};

// Leaves-to-root HSVD truncation. Each non-root node keeps the smallest rank
// whose discarded singular-value tail stays within abs_tol/sqrt(2d-3), then
// clamps to the given bounds. Ranks never increase.
HTTensor ht_truncate(const HTTensor& t, double abs_tol, const RankLimits& limits = {});

// Replaces the frame of `mode` by M * U. M may change the mode size.
HTTensor leaf_transform(const HTTensor& t, int mode, const MatX& m);
// Diagonal fast path: row i of the frame scaled by s[i].
HTTensor scale_leaf_rows(const HTTensor& t, int mode, const VecX& s);
// Weighted row-sum of the mode's frame; the mode collapses to size 1.
HTTensor contract_mode(const HTTensor& t, int mode, std::span<const cplx> weights);
// Removes the listed size-1 modes; remaining modes are renumbered in order.
HTTensor squeeze(const HTTensor& t, std::span<const int> modes);

// Rank-1 tensor from per-mode factor columns (factors[mu] has N_mu entries).
HTTensor ht_separable(TreePtr tree, const std::vector<VecX>& factors);
HTTensor ht_zero(TreePtr tree, std::vector<i64> shape);

}  // namespace slar
