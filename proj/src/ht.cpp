// SPDX-License-Identifier: Apache-2.0
#include "slar/ht.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace slar {

namespace {

// out(c) = sum_{p,q} B(p + q*rl, c) * vl(p) * vr(q), fixed summation order.
void contract_transfer(const MatX& b, const VecX& vl, const VecX& vr, VecX& out) {
  const i64 rl = vl.size();
  const i64 rr = vr.size();
  const i64 ra = b.cols();
  out.resize(ra);
  for (i64 c = 0; c < ra; ++c) {
    const cplx* bc = b.col(c).data();
    cplx acc(0.0, 0.0);
    i64 j = 0;
    for (i64 q = 0; q < rr; ++q) {
      const cplx vq = vr(q);
      for (i64 p = 0; p < rl; ++p) acc += bc[j++] * (vl(p) * vq);
    }
    out(c) = acc;
  }
}

Eigen::Map<const MatX> transfer_slab(const MatX& b, i64 rl, i64 rr, i64 col) {
  return Eigen::Map<const MatX>(b.col(col).data(), rl, rr);
}

struct ThinQr {
  MatX q;
  MatX r;
};

ThinQr thin_qr(const MatX& a) {
  const i64 rows = a.rows();
  const i64 cols = a.cols();
  const i64 k = std::min(rows, cols);
  Eigen::HouseholderQR<MatX> qr(a);
  ThinQr out;
  out.q = qr.householderQ() * MatX::Identity(rows, k);
  out.r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
  return out;
}

}  // namespace

i64 DenseTensor::linear(std::span<const i64> idx) const {
  require(idx.size() == shape.size(), "dense tensor: index arity mismatch");
  i64 lin = 0;
  i64 stride = 1;
  for (size_t m = 0; m < shape.size(); ++m) {
    const i64 i = idx[m];
    if (i < 1 || i > shape[m]) throw std::out_of_range("dense tensor: index out of range");
    lin += (i - 1) * stride;
    stride *= shape[m];
  }
  return lin;
}

HTTensor::HTTensor(TreePtr tree, std::vector<i64> shape, std::vector<MatX> leaf_frames,
                   std::vector<MatX> transfers)
    : tree_(std::move(tree)),
      shape_(std::move(shape)),
      leaf_frames_(std::move(leaf_frames)),
      transfers_(std::move(transfers)) {
  require(tree_ != nullptr, "ht tensor: null tree");
  const int n = tree_->num_nodes();
  require(static_cast<int>(shape_.size()) == tree_->num_modes(), "ht tensor: shape arity mismatch");
  require(static_cast<int>(leaf_frames_.size()) == n && static_cast<int>(transfers_.size()) == n,
          "ht tensor: per-node block arity mismatch");
  for (int id = 0; id < n; ++id) {
    const auto& node = tree_->node(id);
    if (node.leaf()) {
      const MatX& u = leaf_frames_[static_cast<size_t>(id)];
      require(u.rows() == shape_[static_cast<size_t>(node.modes[0] - 1)],
              "ht tensor: leaf frame row count must match the mode size");
      require(u.cols() >= 1, "ht tensor: leaf frame needs at least one column");
    } else {
      const MatX& b = transfers_[static_cast<size_t>(id)];
      require(b.rows() == rank(node.left) * rank(node.right),
              "ht tensor: transfer rows must equal the product of child ranks");
      require(b.cols() >= 1, "ht tensor: transfer needs at least one column");
    }
  }
  require(rank(tree_->root()) == 1, "ht tensor: root rank must be 1");
}

i64 HTTensor::rank(int node_id) const {
  const auto& node = tree_->node(node_id);
  return node.leaf() ? leaf_frames_[static_cast<size_t>(node_id)].cols()
                     : transfers_[static_cast<size_t>(node_id)].cols();
}

std::vector<i64> HTTensor::ranks() const {
  std::vector<i64> out(static_cast<size_t>(tree_->num_nodes()));
  for (int id = 0; id < tree_->num_nodes(); ++id) out[static_cast<size_t>(id)] = rank(id);
  return out;
}

i64 HTTensor::max_rank() const {
  i64 r = 0;
  for (int id = 0; id < tree_->num_nodes(); ++id) r = std::max(r, rank(id));
  return r;
}

i64 HTTensor::max_interior_rank() const {
  i64 r = 1;
  for (int id = 0; id < tree_->num_nodes(); ++id) {
    if (!tree_->node(id).leaf() && id != tree_->root()) r = std::max(r, rank(id));
  }
  return r;
}

i64 HTTensor::storage_count() const {
  i64 count = 0;
  for (int id = 0; id < tree_->num_nodes(); ++id) {
    if (tree_->node(id).leaf())
      count += leaf_frames_[static_cast<size_t>(id)].size();
    else
      count += transfers_[static_cast<size_t>(id)].size();
  }
  return count;
}

cplx ht_entry(const HTTensor& t, std::span<const i64> idx) {
  EntryWorkspace ws;
  return ht_entry(t, idx, ws);
}

cplx ht_entry(const HTTensor& t, std::span<const i64> idx, EntryWorkspace& ws) {
  const DimensionTree& tree = t.tree();
  require(idx.size() == static_cast<size_t>(tree.num_modes()), "ht_entry: index arity mismatch");
  ws.node_vec.resize(static_cast<size_t>(tree.num_nodes()));
  for (int id : tree.bottom_up()) {
    const auto& node = tree.node(id);
    VecX& v = ws.node_vec[static_cast<size_t>(id)];
    if (node.leaf()) {
      const int mode = node.modes[0];
      const i64 i = idx[static_cast<size_t>(mode - 1)];
      const MatX& u = t.frame(id);
      if (i < 1 || i > u.rows()) throw std::out_of_range("ht_entry: index out of range");
      v = u.row(i - 1).transpose();
    } else {
      contract_transfer(t.transfer(id), ws.node_vec[static_cast<size_t>(node.left)],
                        ws.node_vec[static_cast<size_t>(node.right)], v);
    }
  }
  return ws.node_vec[static_cast<size_t>(tree.root())](0);
}

DenseTensor ht_full(const HTTensor& t, i64 size_cap) {
  const DimensionTree& tree = t.tree();
  i64 total = 1;
  for (i64 n : t.shape()) {
    total *= n;
    if (total > size_cap) throw std::length_error("ht_full: dense size cap exceeded");
  }
  std::vector<MatX> full(static_cast<size_t>(tree.num_nodes()));
  for (int id : tree.bottom_up()) {
    const auto& node = tree.node(id);
    if (node.leaf()) {
      full[static_cast<size_t>(id)] = t.frame(id);
      continue;
    }
    const MatX& fl = full[static_cast<size_t>(node.left)];
    const MatX& fr = full[static_cast<size_t>(node.right)];
    const MatX& b = t.transfer(id);
    const i64 rl = fl.cols();
    const i64 rr = fr.cols();
    MatX out(fl.rows() * fr.rows(), b.cols());
    for (i64 c = 0; c < b.cols(); ++c) {
      const MatX slab = fl * transfer_slab(b, rl, rr, c) * fr.transpose();
      out.col(c) = Eigen::Map<const VecX>(slab.data(), slab.size());
    }
    full[static_cast<size_t>(id)] = std::move(out);
    full[static_cast<size_t>(node.left)].resize(0, 0);
    full[static_cast<size_t>(node.right)].resize(0, 0);
  }
  const MatX& root = full[static_cast<size_t>(tree.root())];
  DenseTensor dense;
  dense.shape = t.shape();
  dense.values.assign(root.data(), root.data() + root.size());
  return dense;
}

HTTensor ht_add(const HTTensor& a, const HTTensor& b) {
  require(a.tree().same_structure(b.tree()), "ht_add: dimension trees differ");
  require(a.shape() == b.shape(), "ht_add: shapes differ");
  const DimensionTree& tree = a.tree();
  if (tree.num_modes() == 1) {
    std::vector<MatX> frames{a.frame(0) + b.frame(0)};
    return HTTensor(a.tree_ptr(), a.shape(), std::move(frames), {MatX()});
  }
  std::vector<MatX> frames(static_cast<size_t>(tree.num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(tree.num_nodes()));
  for (int id = 0; id < tree.num_nodes(); ++id) {
    const auto& node = tree.node(id);
    if (node.leaf()) {
      MatX u(a.frame(id).rows(), a.rank(id) + b.rank(id));
      u << a.frame(id), b.frame(id);
      frames[static_cast<size_t>(id)] = std::move(u);
      continue;
    }
    const i64 rla = a.rank(node.left), rra = a.rank(node.right), raa = a.rank(id);
    const i64 rlb = b.rank(node.left), rrb = b.rank(node.right), rab = b.rank(id);
    const i64 rl = rla + rlb;
    const bool root = id == tree.root();
    const i64 cols = root ? 1 : raa + rab;
    MatX out = MatX::Zero(rl * (rra + rrb), cols);
    const MatX& ba = a.transfer(id);
    const MatX& bb = b.transfer(id);
    for (i64 c = 0; c < raa; ++c)
      for (i64 q = 0; q < rra; ++q)
        for (i64 p = 0; p < rla; ++p) out(p + q * rl, root ? 0 : c) += ba(p + q * rla, c);
    for (i64 c = 0; c < rab; ++c)
      for (i64 q = 0; q < rrb; ++q)
        for (i64 p = 0; p < rlb; ++p)
          out((rla + p) + (rra + q) * rl, root ? 0 : raa + c) += bb(p + q * rlb, c);
    transfers[static_cast<size_t>(id)] = std::move(out);
  }
  return HTTensor(a.tree_ptr(), a.shape(), std::move(frames), std::move(transfers));
}

HTTensor ht_scale(const HTTensor& a, cplx c) {
  std::vector<MatX> frames(static_cast<size_t>(a.tree().num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(a.tree().num_nodes()));
  for (int id = 0; id < a.tree().num_nodes(); ++id) {
    if (a.tree().node(id).leaf())
      frames[static_cast<size_t>(id)] = a.frame(id);
    else
      transfers[static_cast<size_t>(id)] = a.transfer(id);
  }
  const int root = a.tree().root();
  if (a.tree().node(root).leaf())
    frames[static_cast<size_t>(root)] *= c;
  else
    transfers[static_cast<size_t>(root)] *= c;
  return HTTensor(a.tree_ptr(), a.shape(), std::move(frames), std::move(transfers));
}

HTTensor ht_orthogonalize(const HTTensor& t) {
  const DimensionTree& tree = t.tree();
  if (tree.num_modes() == 1) return t;
  std::vector<MatX> frames(static_cast<size_t>(tree.num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(tree.num_nodes()));
  std::vector<MatX> rfactor(static_cast<size_t>(tree.num_nodes()));
  for (int id : tree.bottom_up()) {
    const auto& node = tree.node(id);
    if (node.leaf()) {
      ThinQr qr = thin_qr(t.frame(id));
      frames[static_cast<size_t>(id)] = std::move(qr.q);
      rfactor[static_cast<size_t>(id)] = std::move(qr.r);
      continue;
    }
    const MatX& b = t.transfer(id);
    const MatX& rl = rfactor[static_cast<size_t>(node.left)];
    const MatX& rr = rfactor[static_cast<size_t>(node.right)];
    const i64 rl_old = rl.cols();
    const i64 rr_old = rr.cols();
    MatX updated(rl.rows() * rr.rows(), b.cols());
    for (i64 c = 0; c < b.cols(); ++c) {
      const MatX slab = rl * transfer_slab(b, rl_old, rr_old, c) * rr.transpose();
      updated.col(c) = Eigen::Map<const VecX>(slab.data(), slab.size());
    }
    if (id == tree.root()) {
      transfers[static_cast<size_t>(id)] = std::move(updated);
    } else {
      ThinQr qr = thin_qr(updated);
      transfers[static_cast<size_t>(id)] = std::move(qr.q);
      rfactor[static_cast<size_t>(id)] = std::move(qr.r);
    }
  }
  return HTTensor(t.tree_ptr(), t.shape(), std::move(frames), std::move(transfers));
}

double ht_norm(const HTTensor& t) {
  if (t.tree().num_modes() == 1) return t.frame(t.tree().root()).norm();
  const HTTensor o = ht_orthogonalize(t);
  return o.transfer(o.tree().root()).norm();
}

namespace {

// Reduced Gramians of an orthogonalized tensor, top-down. Eigenvalues of
// gram[id] are the squared singular values of the node's matricization.
std::vector<MatX> reduced_gramians(const HTTensor& o) {
  const DimensionTree& tree = o.tree();
  std::vector<MatX> gram(static_cast<size_t>(tree.num_nodes()));
  gram[static_cast<size_t>(tree.root())] = MatX::Ones(1, 1);
  std::vector<int> top_down = tree.bottom_up();
  std::reverse(top_down.begin(), top_down.end());
  for (int id : top_down) {
    const auto& node = tree.node(id);
    if (node.leaf()) continue;
    const MatX& b = o.transfer(id);
    const MatX& g = gram[static_cast<size_t>(id)];
    const i64 rl = o.rank(node.left);
    const i64 rr = o.rank(node.right);
    MatX gl = MatX::Zero(rl, rl);
    MatX gr = MatX::Zero(rr, rr);
    for (i64 q = 0; q < rr; ++q) {
      const auto mq = b.block(q * rl, 0, rl, b.cols());
      gl.noalias() += mq * g * mq.adjoint();
    }
    for (i64 p = 0; p < rl; ++p) {
      Eigen::Map<const MatX, 0, Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>> kp(
          b.data() + p, rr, b.cols(),
          Eigen::Stride<Eigen::Dynamic, Eigen::Dynamic>(b.rows(), rl));
      gr.noalias() += kp * g * kp.adjoint();
    }
    gram[static_cast<size_t>(node.left)] = std::move(gl);
    gram[static_cast<size_t>(node.right)] = std::move(gr);
  }
  return gram;
}

// Applies per-node column projections to an orthogonalized tensor;
// proj entries must be identity-shaped (r x r) where no reduction happens.
HTTensor apply_projections(const HTTensor& o, const std::vector<MatX>& proj) {
  const DimensionTree& tree = o.tree();
  std::vector<MatX> frames(static_cast<size_t>(tree.num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(tree.num_nodes()));
  for (int id = 0; id < tree.num_nodes(); ++id) {
    const auto& node = tree.node(id);
    if (node.leaf()) {
      frames[static_cast<size_t>(id)] = o.frame(id) * proj[static_cast<size_t>(id)];
      continue;
    }
    const MatX& b = o.transfer(id);
    const MatX& sl = proj[static_cast<size_t>(node.left)];
    const MatX& sr = proj[static_cast<size_t>(node.right)];
    const i64 rl = o.rank(node.left);
    const i64 rr = o.rank(node.right);
    MatX reduced(sl.cols() * sr.cols(), b.cols());
    for (i64 c = 0; c < b.cols(); ++c) {
      const MatX slab = sl.adjoint() * transfer_slab(b, rl, rr, c) * sr.conjugate();
      reduced.col(c) = Eigen::Map<const VecX>(slab.data(), slab.size());
    }
    transfers[static_cast<size_t>(id)] = reduced * proj[static_cast<size_t>(id)];
  }
  return HTTensor(o.tree_ptr(), o.shape(), std::move(frames), std::move(transfers));
}

}  // namespace

HTTensor ht_truncate(const HTTensor& t, double abs_tol, const RankLimits& limits) {
  require(abs_tol >= 0.0, "ht_truncate: tolerance must be nonnegative");
  require(limits.leaf_min <= limits.leaf_max && limits.interior_min <= limits.interior_max,
          "ht_truncate: rank floor above cap");
  const DimensionTree& tree = t.tree();
  const int d = tree.num_modes();
  if (d == 1) return t;

  // Per-node tail budget from the quasi-optimal split over 2d-3 truncations.
  const double budget2 = (abs_tol * abs_tol) / static_cast<double>(2 * d - 3);
  const int root = tree.root();

  // Leaves-to-root: one level at a time, deepest nodes first, with the
  // Gramians recomputed after each level so already-removed components do
  // not inflate the singular values seen higher up.
  HTTensor current = t;
  int max_depth = 0;
  for (const auto& node : tree.nodes()) max_depth = std::max(max_depth, node.depth);
  for (int level = max_depth; level >= 1; --level) {
    const HTTensor o = ht_orthogonalize(current);
    const std::vector<MatX> gram = reduced_gramians(o);
    std::vector<MatX> proj(static_cast<size_t>(tree.num_nodes()));
    bool reduces = false;
    for (int id = 0; id < tree.num_nodes(); ++id) {
      const i64 r_cur = o.rank(id);
      if (id == root || tree.node(id).depth != level) {
        proj[static_cast<size_t>(id)] = MatX::Identity(r_cur, r_cur);
        continue;
      }
      const bool leaf = tree.node(id).leaf();
      Eigen::SelfAdjointEigenSolver<MatX> evd(gram[static_cast<size_t>(id)]);
      Eigen::VectorXd lambda = evd.eigenvalues().cwiseMax(0.0);  // ascending
      // Smallest kept rank whose discarded tail fits the budget.
      i64 keep = r_cur;
      double tail = 0.0;
      for (i64 i = 0; i < r_cur; ++i) {
        const double next = tail + lambda(i);
        const bool droppable = abs_tol > 0.0 ? next <= budget2 : lambda(i) == 0.0;
        if (!droppable) break;
        tail = next;
        keep = r_cur - (i + 1);
      }
      const i64 lo = leaf ? limits.leaf_min : limits.interior_min;
      const i64 hi = leaf ? limits.leaf_max : limits.interior_max;
      keep = std::min(std::min(std::max(keep, lo), hi), r_cur);
      keep = std::max<i64>(keep, 1);
      MatX s(r_cur, keep);
      for (i64 j = 0; j < keep; ++j) s.col(j) = evd.eigenvectors().col(r_cur - 1 - j);
      if (keep < current.rank(id)) reduces = true;
      proj[static_cast<size_t>(id)] = std::move(s);
    }
    if (!reduces) continue;  // nothing to drop at this level
    current = apply_projections(o, proj);
  }
  return current;
}

HTTensor leaf_transform(const HTTensor& t, int mode, const MatX& m) {
  require(mode >= 1 && mode <= t.dims(), "leaf_transform: bad mode");
  const int id = t.tree().leaf_of_mode(mode);
  require(m.cols() == t.shape()[static_cast<size_t>(mode - 1)],
          "leaf_transform: matrix column count must match the mode size");
  std::vector<MatX> frames(static_cast<size_t>(t.tree().num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(t.tree().num_nodes()));
  for (int n = 0; n < t.tree().num_nodes(); ++n) {
    if (t.tree().node(n).leaf())
      frames[static_cast<size_t>(n)] = t.frame(n);
    else
      transfers[static_cast<size_t>(n)] = t.transfer(n);
  }
  frames[static_cast<size_t>(id)] = m * t.frame(id);
  std::vector<i64> shape = t.shape();
  shape[static_cast<size_t>(mode - 1)] = m.rows();
  return HTTensor(t.tree_ptr(), std::move(shape), std::move(frames), std::move(transfers));
}

HTTensor scale_leaf_rows(const HTTensor& t, int mode, const VecX& s) {
  require(mode >= 1 && mode <= t.dims(), "scale_leaf_rows: bad mode");
  require(s.size() == t.shape()[static_cast<size_t>(mode - 1)],
          "scale_leaf_rows: diagonal length must match the mode size");
  const int id = t.tree().leaf_of_mode(mode);
  std::vector<MatX> frames(static_cast<size_t>(t.tree().num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(t.tree().num_nodes()));
  for (int n = 0; n < t.tree().num_nodes(); ++n) {
    if (t.tree().node(n).leaf())
      frames[static_cast<size_t>(n)] = t.frame(n);
    else
      transfers[static_cast<size_t>(n)] = t.transfer(n);
  }
  frames[static_cast<size_t>(id)] = s.asDiagonal() * t.frame(id);
  return HTTensor(t.tree_ptr(), t.shape(), std::move(frames), std::move(transfers));
}

HTTensor contract_mode(const HTTensor& t, int mode, std::span<const cplx> weights) {
  require(static_cast<i64>(weights.size()) == t.shape()[static_cast<size_t>(mode - 1)],
          "contract_mode: weight length must match the mode size");
  MatX row(1, weights.size());
  for (size_t i = 0; i < weights.size(); ++i) row(0, static_cast<i64>(i)) = weights[i];
  return leaf_transform(t, mode, row);
}

namespace {

struct SqueezeFrag {
  bool leaf = false;
  int old_mode = 0;  // valid for leaves
  MatX block;        // leaf frame or matricized transfer
  std::unique_ptr<SqueezeFrag> left, right;
};

struct SqueezeResult {
  std::unique_ptr<SqueezeFrag> kept;  // null when absorbed
  MatX absorbed;                      // 1 x r row when kept == nullptr
};

// Multiplies the fragment's root block by W on the right, re-expressing its
// columns in the parent's rank basis.
void fold_into_root(SqueezeFrag& frag, const MatX& w) { frag.block = frag.block * w; }

SqueezeResult squeeze_rec(const HTTensor& t, int id, const std::vector<char>& removed) {
  const auto& node = t.tree().node(id);
  if (node.leaf()) {
    SqueezeResult res;
    if (removed[static_cast<size_t>(node.modes[0] - 1)]) {
      res.absorbed = t.frame(id);  // 1 x r
    } else {
      res.kept = std::make_unique<SqueezeFrag>();
      res.kept->leaf = true;
      res.kept->old_mode = node.modes[0];
      res.kept->block = t.frame(id);
    }
    return res;
  }
  SqueezeResult l = squeeze_rec(t, node.left, removed);
  SqueezeResult r = squeeze_rec(t, node.right, removed);
  const MatX& b = t.transfer(id);
  const i64 rl = t.rank(node.left);
  const i64 rr = t.rank(node.right);
  const i64 ra = b.cols();
  SqueezeResult res;
  if (l.kept && r.kept) {
    res.kept = std::make_unique<SqueezeFrag>();
    res.kept->block = b;
    res.kept->left = std::move(l.kept);
    res.kept->right = std::move(r.kept);
  } else if (!l.kept && r.kept) {
    MatX w(rr, ra);
    for (i64 c = 0; c < ra; ++c)
      w.col(c) = (l.absorbed * transfer_slab(b, rl, rr, c)).transpose();
    fold_into_root(*r.kept, w);
    res.kept = std::move(r.kept);
  } else if (l.kept && !r.kept) {
    MatX w(rl, ra);
    for (i64 c = 0; c < ra; ++c)
      w.col(c) = transfer_slab(b, rl, rr, c) * r.absorbed.transpose();
    fold_into_root(*l.kept, w);
    res.kept = std::move(l.kept);
  } else {
    MatX u(1, ra);
    for (i64 c = 0; c < ra; ++c)
      u(0, c) = (l.absorbed * transfer_slab(b, rl, rr, c) * r.absorbed.transpose())(0, 0);
    res.absorbed = std::move(u);
  }
  return res;
}

int collect_frag(const SqueezeFrag& frag, const std::vector<int>& mode_map,
                 std::vector<DimensionTree::Node>& nodes, std::vector<MatX>& frames,
                 std::vector<MatX>& transfers) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  frames.emplace_back();
  transfers.emplace_back();
  if (frag.leaf) {
    nodes[static_cast<size_t>(id)].modes = {mode_map[static_cast<size_t>(frag.old_mode - 1)]};
    frames[static_cast<size_t>(id)] = frag.block;
    return id;
  }
  transfers[static_cast<size_t>(id)] = frag.block;
  const int l = collect_frag(*frag.left, mode_map, nodes, frames, transfers);
  const int r = collect_frag(*frag.right, mode_map, nodes, frames, transfers);
  nodes[static_cast<size_t>(id)].left = l;
  nodes[static_cast<size_t>(id)].right = r;
  nodes[static_cast<size_t>(l)].parent = id;
  nodes[static_cast<size_t>(r)].parent = id;
  auto& modes = nodes[static_cast<size_t>(id)].modes;
  modes = nodes[static_cast<size_t>(l)].modes;
  modes.insert(modes.end(), nodes[static_cast<size_t>(r)].modes.begin(),
               nodes[static_cast<size_t>(r)].modes.end());
  return id;
}

}  // namespace

HTTensor squeeze(const HTTensor& t, std::span<const int> modes) {
  if (modes.empty()) return t;
  std::vector<char> removed(static_cast<size_t>(t.dims()), 0);
  for (int m : modes) {
    require(m >= 1 && m <= t.dims(), "squeeze: bad mode");
    require(t.shape()[static_cast<size_t>(m - 1)] == 1, "squeeze: mode size must be 1");
    removed[static_cast<size_t>(m - 1)] = 1;
  }
  std::vector<int> mode_map(static_cast<size_t>(t.dims()), 0);
  int next = 1;
  for (int m = 1; m <= t.dims(); ++m)
    if (!removed[static_cast<size_t>(m - 1)]) mode_map[static_cast<size_t>(m - 1)] = next++;
  require(next > 1, "squeeze: at least one mode must remain");

  SqueezeResult top = squeeze_rec(t, t.tree().root(), removed);
  require(top.kept != nullptr, "squeeze: cannot remove every mode");

  std::vector<DimensionTree::Node> nodes;
  std::vector<MatX> frames, transfers;
  collect_frag(*top.kept, mode_map, nodes, frames, transfers);
  auto tree = std::make_shared<const DimensionTree>(DimensionTree::from_nodes(std::move(nodes)));

  std::vector<i64> shape;
  for (int m = 1; m <= t.dims(); ++m)
    if (!removed[static_cast<size_t>(m - 1)]) shape.push_back(t.shape()[static_cast<size_t>(m - 1)]);
  return HTTensor(std::move(tree), std::move(shape), std::move(frames), std::move(transfers));
}

HTTensor ht_separable(TreePtr tree, const std::vector<VecX>& factors) {
  require(static_cast<int>(factors.size()) == tree->num_modes(),
          "ht_separable: one factor per mode expected");
  std::vector<i64> shape(factors.size());
  for (size_t m = 0; m < factors.size(); ++m) shape[m] = factors[m].size();
  std::vector<MatX> frames(static_cast<size_t>(tree->num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(tree->num_nodes()));
  for (int id = 0; id < tree->num_nodes(); ++id) {
    const auto& node = tree->node(id);
    if (node.leaf())
      frames[static_cast<size_t>(id)] = factors[static_cast<size_t>(node.modes[0] - 1)];
    else
      transfers[static_cast<size_t>(id)] = MatX::Ones(1, 1);
  }
  return HTTensor(std::move(tree), std::move(shape), std::move(frames), std::move(transfers));
}

HTTensor ht_zero(TreePtr tree, std::vector<i64> shape) {
  require(static_cast<int>(shape.size()) == tree->num_modes(), "ht_zero: shape arity mismatch");
  std::vector<VecX> factors(shape.size());
  for (size_t m = 0; m < shape.size(); ++m) factors[m] = VecX::Zero(shape[m]);
  return ht_separable(std::move(tree), factors);
}

}  // namespace slar
