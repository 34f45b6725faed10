// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include "slar/common.hpp"

namespace slar {

enum class TreeStrategy { kBalanced, kPairedUnbalanced };

// Binary tree over mode subsets. The root covers modes {1..d}, every leaf is
// a single mode, children of a node are disjoint with union equal to the
// parent, and all modes of a left child precede those of the right child.
class DimensionTree {
 public:
  struct Node {
    std::vector<int> modes;  // ascending, 1-based
    int parent = -1;
    int left = -1;
    int right = -1;
    int depth = 0;          // edges from the root
    int subtree_depth = 0;  // edges down to the deepest leaf below this node
    bool leaf() const { return left < 0; }
    int order() const { return static_cast<int>(modes.size()); }
  };

  static DimensionTree build(int num_modes, TreeStrategy strategy);

  // Assembles a tree from explicit parent/child links; modes are validated
  // and depths recomputed. Used by squeeze and by deserialization.
  static DimensionTree from_nodes(std::vector<Node> nodes);

  int num_modes() const { return d_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int root() const { return 0; }
  int depth() const { return nodes_[0].subtree_depth; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int leaf_of_mode(int mode) const { return leaf_of_mode_[static_cast<size_t>(mode - 1)]; }

  // Node ids ordered so children always precede their parent.
  std::vector<int> bottom_up() const;

  bool same_structure(const DimensionTree& other) const;

 private:
  int d_ = 0;
  std::vector<Node> nodes_;
  std::vector<int> leaf_of_mode_;

  void finalize();
};

using TreePtr = std::shared_ptr<const DimensionTree>;

TreePtr build_tree(int num_modes, TreeStrategy strategy);

// Linearized index over an ordered mode list: the first listed mode varies
// fastest. `idx` holds 1-based indices parallel to `modes`; `shape` is the
// full per-mode size vector indexed by mode number.
i64 linearize(std::span<const int> modes, std::span<const i64> shape, std::span<const i64> idx);
void delinearize(std::span<const int> modes, std::span<const i64> shape, i64 linear,
                 std::span<i64> idx_out);

}  // namespace slar
