// SPDX-License-Identifier: Apache-2.0
#include "slar/tree.hpp"

#include <algorithm>
#include <numeric>

namespace slar {

namespace {

// Recursively splits [lo, hi] (inclusive mode range) and appends nodes in
// preorder. Returns the id of the created node.
int split_balanced(std::vector<DimensionTree::Node>& nodes, int lo, int hi) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  auto& modes = nodes[static_cast<size_t>(id)].modes;
  modes.resize(static_cast<size_t>(hi - lo + 1));
  std::iota(modes.begin(), modes.end(), lo);
  if (lo == hi) return id;
  const int count = hi - lo + 1;
  const int mid = lo + (count + 1) / 2 - 1;  // left child takes ceil(count/2)
  const int l = split_balanced(nodes, lo, mid);
  const int r = split_balanced(nodes, mid + 1, hi);
  nodes[static_cast<size_t>(id)].left = l;
  nodes[static_cast<size_t>(id)].right = r;
  nodes[static_cast<size_t>(l)].parent = id;
  nodes[static_cast<size_t>(r)].parent = id;
  return id;
}

// Left-deep combination of adjacent mode pairs: {1,2}, then {1..4} with
// right child {3,4}, then {1..6} with right child {5,6}, and so on.
int split_paired(std::vector<DimensionTree::Node>& nodes, int lo, int hi) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  auto& modes = nodes[static_cast<size_t>(id)].modes;
  modes.resize(static_cast<size_t>(hi - lo + 1));
  std::iota(modes.begin(), modes.end(), lo);
  if (lo == hi) return id;
  int l, r;
  if (hi - lo + 1 == 2) {
    l = split_paired(nodes, lo, lo);
    r = split_paired(nodes, hi, hi);
  } else {
    l = split_paired(nodes, lo, hi - 2);
    r = split_paired(nodes, hi - 1, hi);
  }
  nodes[static_cast<size_t>(id)].left = l;
  nodes[static_cast<size_t>(id)].right = r;
  nodes[static_cast<size_t>(l)].parent = id;
  nodes[static_cast<size_t>(r)].parent = id;
  return id;
}

void compute_depths(std::vector<DimensionTree::Node>& nodes, int id, int depth) {
  auto& n = nodes[static_cast<size_t>(id)];
  n.depth = depth;
  if (n.leaf()) {
    n.subtree_depth = 0;
    return;
  }
  compute_depths(nodes, n.left, depth + 1);
  compute_depths(nodes, n.right, depth + 1);
  n.subtree_depth = 1 + std::max(nodes[static_cast<size_t>(n.left)].subtree_depth,
                                 nodes[static_cast<size_t>(n.right)].subtree_depth);
}

}  // namespace

void DimensionTree::finalize() {
  compute_depths(nodes_, 0, 0);
  d_ = nodes_[0].order();
  leaf_of_mode_.assign(static_cast<size_t>(d_), -1);
  int leaf_count = 0;
  for (int id = 0; id < num_nodes(); ++id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    if (n.leaf()) {
      require(n.order() == 1, "dimension tree: leaf must hold a single mode");
      leaf_of_mode_[static_cast<size_t>(n.modes[0] - 1)] = id;
      ++leaf_count;
    } else {
      const Node& l = nodes_[static_cast<size_t>(n.left)];
      const Node& r = nodes_[static_cast<size_t>(n.right)];
      require(l.modes.back() < r.modes.front(),
              "dimension tree: left-child modes must precede right-child modes");
      std::vector<int> merged = l.modes;
      merged.insert(merged.end(), r.modes.begin(), r.modes.end());
      require(merged == n.modes, "dimension tree: parent must be the union of its children");
    }
  }
  require(leaf_count == d_, "dimension tree: one leaf per mode expected");
  require(num_nodes() == 2 * d_ - 1, "dimension tree: node count must be 2d-1");
}

DimensionTree DimensionTree::build(int num_modes, TreeStrategy strategy) {
  if (num_modes < 1) throw ConfigError("dimension tree: mode count must be at least 1");
  DimensionTree t;
  switch (strategy) {
    case TreeStrategy::kBalanced:
      split_balanced(t.nodes_, 1, num_modes);
      break;
    case TreeStrategy::kPairedUnbalanced:
      if (num_modes % 2 != 0)
        throw ConfigError("dimension tree: paired-unbalanced requires an even mode count");
      split_paired(t.nodes_, 1, num_modes);
      break;
    default:
      throw ConfigError("dimension tree: unknown strategy");
  }
  t.finalize();
  return t;
}

DimensionTree DimensionTree::from_nodes(std::vector<Node> nodes) {
  require(!nodes.empty(), "dimension tree: empty node list");
  DimensionTree t;
  t.nodes_ = std::move(nodes);
  t.finalize();
  return t;
}

std::vector<int> DimensionTree::bottom_up() const {
  std::vector<int> ids(static_cast<size_t>(num_nodes()));
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return nodes_[static_cast<size_t>(a)].depth > nodes_[static_cast<size_t>(b)].depth;
  });
  return ids;
}

bool DimensionTree::same_structure(const DimensionTree& other) const {
  if (d_ != other.d_ || nodes_.size() != other.nodes_.size()) return false;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node& a = nodes_[i];
    const Node& b = other.nodes_[i];
    if (a.modes != b.modes || a.left != b.left || a.right != b.right) return false;
  }
  return true;
}

TreePtr build_tree(int num_modes, TreeStrategy strategy) {
  return std::make_shared<const DimensionTree>(DimensionTree::build(num_modes, strategy));
}

i64 linearize(std::span<const int> modes, std::span<const i64> shape, std::span<const i64> idx) {
  require(modes.size() == idx.size(), "linearize: index arity mismatch");
  i64 linear = 1;
  i64 stride = 1;
  for (size_t l = 0; l < modes.size(); ++l) {
    const i64 n = shape[static_cast<size_t>(modes[l] - 1)];
    const i64 i = idx[l];
    if (i < 1 || i > n) throw std::out_of_range("linearize: index out of range");
    linear += (i - 1) * stride;
    stride *= n;
  }
  return linear;
}

void delinearize(std::span<const int> modes, std::span<const i64> shape, i64 linear,
                 std::span<i64> idx_out) {
  require(modes.size() == idx_out.size(), "delinearize: index arity mismatch");
  i64 rem = linear - 1;
  i64 total = 1;
  for (size_t l = 0; l < modes.size(); ++l) total *= shape[static_cast<size_t>(modes[l] - 1)];
  if (linear < 1 || linear > total) throw std::out_of_range("delinearize: index out of range");
  for (size_t l = 0; l < modes.size(); ++l) {
    const i64 n = shape[static_cast<size_t>(modes[l] - 1)];
    idx_out[l] = rem % n + 1;
    rem /= n;
  }
}

}  // namespace slar
