// SPDX-License-Identifier: Apache-2.0
#include "slar/cross.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "slar/parallel.hpp"

namespace slar {

void AcaParams::validate() const {
  require(eps_base > 0.0, "aca params: eps_base must be positive");
  require(gamma > 0.0 && gamma <= 1.0, "aca params: gamma must lie in (0, 1]");
  require(r_min >= 1 && r_min <= r_max, "aca params: rank bounds out of order");
  require(r_hash_min >= 1, "aca params: r_hash_min must be at least 1");
  require(r_hash_max == 0 || r_hash_min <= r_hash_max,
          "aca params: correction bounds out of order");
}

RankLimits AcaParams::rank_limits() const {
  RankLimits lim;
  lim.leaf_min = r_min_leaf > 0 ? r_min_leaf : r_min;
  lim.leaf_max = r_max;
  lim.interior_min = r_min;
  lim.interior_max = r_max;
  return lim;
}

std::pair<i64, i64> sampling_params(int order) {
  require(order >= 1, "sampling_params: order must be at least 1");
  i64 s = 1;
  for (int i = 0; i < order; ++i) s *= 3;
  return {s, order - 1};
}

double pivot_tolerance(const AcaParams& params, const DimensionTree& tree, int node,
                       double max_estimate) {
  const int exponent = tree.depth() - tree.node(node).subtree_depth;
  return std::pow(params.gamma, exponent) * params.eps_base * max_estimate;
}

void IndexPool::insert(i64 v) {
  auto it = std::lower_bound(used.begin(), used.end(), v);
  if (it == used.end() || *it != v) used.insert(it, v);
}

bool IndexPool::contains(i64 v) const { return std::binary_search(used.begin(), used.end(), v); }

i64 IndexPool::unused_at(i64 rank) const {
  i64 v = rank + 1;
  for (i64 u : used) {
    if (u <= v)
      ++v;
    else
      break;
  }
  return v;
}

namespace {

cplx checked_eval(const EntryAccessor& acc, std::span<const i64> idx) {
  const cplx v = acc.eval(idx);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw std::runtime_error("cross approximation: non-finite residual value encountered");
  return v;
}

i64 local_linearize(std::span<const i64> shape, std::span<const i64> idx) {
  i64 lin = 1, stride = 1;
  for (size_t m = 0; m < shape.size(); ++m) {
    lin += (idx[m] - 1) * stride;
    stride *= shape[m];
  }
  return lin;
}

void local_delinearize(std::span<const i64> shape, i64 lin, std::span<i64> idx) {
  i64 rem = lin - 1;
  for (size_t m = 0; m < shape.size(); ++m) {
    idx[m] = rem % shape[m] + 1;
    rem /= shape[m];
  }
}

// Argmax fiber scan at a leaf: evaluates the whole fiber concurrently and
// picks the first index of maximal magnitude.
PivotResult leaf_pivot(const EntryAccessor& res) {
  const i64 n = res.shape[0];
  std::vector<cplx> fiber(static_cast<size_t>(n));
  parallel_for(n, [&](i64 i) {
    const i64 idx[1] = {i + 1};
    fiber[static_cast<size_t>(i)] = res.eval(idx);
  });
  PivotResult out;
  i64 best = 0;
  double best_mag = -1.0;
  for (i64 i = 0; i < n; ++i) {
    const cplx v = fiber[static_cast<size_t>(i)];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::runtime_error("cross approximation: non-finite residual value encountered");
    const double mag = std::abs(v);
    if (mag > best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  out.value = fiber[static_cast<size_t>(best)];
  out.index = {best + 1};
  return out;
}

struct CandidatePair {
  i64 lin_l, lin_r;
};

}  // namespace

PivotResult recursive_pivot_search(const EntryAccessor& residual, const DimensionTree& tree,
                                   int node, IndexPool* used_left, IndexPool* used_right,
                                   const MultiIndex* candidate, int depth, CounterRng rng) {
  const auto& tnode = tree.node(node);
  if (tnode.subtree_depth == 0) return leaf_pivot(residual);

  const int kl = tree.node(tnode.left).order();
  const int k = tnode.order();
  require(residual.dims() == k, "pivot search: accessor arity mismatch");
  const std::span<const i64> shape_l(residual.shape.data(), static_cast<size_t>(kl));
  const std::span<const i64> shape_r(residual.shape.data() + kl, static_cast<size_t>(k - kl));
  const i64 ml = product(shape_l);
  const i64 mr = product(shape_r);

  IndexPool empty_l{ml, {}}, empty_r{mr, {}};
  IndexPool& pl = (depth == 0 && used_left) ? *used_left : empty_l;
  IndexPool& pr = (depth == 0 && used_right) ? *used_right : empty_r;
  pl.total = ml;
  pr.total = mr;

  PivotResult out;
  if (pl.remaining() == 0 || pr.remaining() == 0) {
    out.exhausted = true;
    return out;
  }

  const auto [s, m] = sampling_params(k);
  const i64 avail = pl.remaining() * pr.remaining();
  std::vector<CandidatePair> cand;
  if (avail <= s) {
    cand.reserve(static_cast<size_t>(avail));
    for (i64 a = 0; a < pl.remaining(); ++a)
      for (i64 b = 0; b < pr.remaining(); ++b)
        cand.push_back({pl.unused_at(a), pr.unused_at(b)});
  } else {
    std::set<std::pair<i64, i64>> seen;
    cand.reserve(static_cast<size_t>(s));
    while (static_cast<i64>(cand.size()) < s) {
      const i64 a = pl.unused_at(static_cast<i64>(rng.below(static_cast<u64>(pl.remaining()))));
      const i64 b = pr.unused_at(static_cast<i64>(rng.below(static_cast<u64>(pr.remaining()))));
      if (seen.insert({a, b}).second) cand.push_back({a, b});
    }
  }
  if (candidate != nullptr) {
    require(static_cast<int>(candidate->size()) == k, "pivot search: candidate arity mismatch");
    const std::span<const i64> cspan(candidate->data(), candidate->size());
    cand.push_back({local_linearize(shape_l, cspan.subspan(0, static_cast<size_t>(kl))),
                    local_linearize(shape_r, cspan.subspan(static_cast<size_t>(kl)))});
  }

  std::vector<cplx> values(cand.size());
  parallel_for(static_cast<i64>(cand.size()), [&](i64 c) {
    thread_local MultiIndex idx;
    idx.resize(static_cast<size_t>(k));
    std::span<i64> span(idx);
    local_delinearize(shape_l, cand[static_cast<size_t>(c)].lin_l,
                      span.subspan(0, static_cast<size_t>(kl)));
    local_delinearize(shape_r, cand[static_cast<size_t>(c)].lin_r,
                      span.subspan(static_cast<size_t>(kl)));
    values[static_cast<size_t>(c)] = residual.eval(idx);
  });

  i64 best = 0;
  double best_mag = -1.0;
  for (size_t c = 0; c < values.size(); ++c) {
    const cplx v = values[c];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::runtime_error("cross approximation: non-finite residual value encountered");
    const double mag = std::abs(v);
    if (mag > best_mag) {
      best_mag = mag;
      best = static_cast<i64>(c);
    }
  }

  MultiIndex left_multi(static_cast<size_t>(kl));
  MultiIndex right_multi(static_cast<size_t>(k - kl));
  local_delinearize(shape_l, cand[static_cast<size_t>(best)].lin_l, left_multi);
  local_delinearize(shape_r, cand[static_cast<size_t>(best)].lin_r, right_multi);
  cplx p = values[static_cast<size_t>(best)];

  for (i64 round = 0; round < m; ++round) {
    bool moved = false;
    EntryAccessor res_l = restrict_modes(residual, kl, right_multi);
    PivotResult sub_l = recursive_pivot_search(res_l, tree, tnode.left, nullptr, nullptr,
                                               &left_multi, depth + 1,
                                               rng.split(static_cast<u64>(4 * round + 2)));
    if (sub_l.index != left_multi) {
      left_multi = sub_l.index;
      moved = true;
    }
    p = sub_l.value;

    EntryAccessor res_r = restrict_modes(residual, 0, left_multi);
    PivotResult sub_r = recursive_pivot_search(res_r, tree, tnode.right, nullptr, nullptr,
                                               &right_multi, depth + 1,
                                               rng.split(static_cast<u64>(4 * round + 3)));
    if (sub_r.index != right_multi) {
      right_multi = sub_r.index;
      moved = true;
    }
    p = sub_r.value;

    if (!moved) break;  // rook condition met
  }

  out.value = p;
  out.index = left_multi;
  out.index.insert(out.index.end(), right_multi.begin(), right_multi.end());
  if (depth == 0) {
    pl.insert(local_linearize(shape_l, left_multi));
    pr.insert(local_linearize(shape_r, right_multi));
  }
  return out;
}

namespace {

cplx safeguarded_inverse(cplx p) {
  const double mag = std::abs(p);
  if (mag == 0.0) return cplx(1.0, 0.0) / cplx(1e-15, 0.0);
  // p + sign(p) * 1e-15 with the complex phase as the sign
  return cplx(1.0, 0.0) / (p + (p / mag) * 1e-15);
}

}  // namespace

MatrixAcaResult matrix_aca(const EntryAccessor& acc, double tol, i64 max_rank, u64 rng_seed,
                           AcaStats* stats) {
  require(acc.dims() == 2, "matrix_aca: 2-mode accessor expected");
  require(tol >= 0.0 && max_rank >= 1, "matrix_aca: bad tolerance or rank cap");
  static const TreePtr tree2 = build_tree(2, TreeStrategy::kBalanced);
  const i64 n1 = acc.shape[0];
  const i64 n2 = acc.shape[1];

  MatrixAcaResult res;
  res.col_factors.resize(n1, 0);
  res.row_factors.resize(0, n2);

  EntryAccessor base = acc;
  if (stats != nullptr) base = counted_accessor(base, &stats->accessor_evals);

  EntryAccessor residual;
  residual.shape = base.shape;
  const MatX* up = &res.col_factors;
  const MatX* vp = &res.row_factors;
  residual.eval = [base = base.eval, up, vp](std::span<const i64> idx) {
    cplx v = base(idx);
    const i64 k = up->cols();
    if (k > 0) v -= ((*up).row(idx[0] - 1) * (*vp).col(idx[1] - 1))(0);
    return v;
  };

  IndexPool pool_l{n1, {}}, pool_r{n2, {}};
  CounterRng rng{CounterRng::mix(rng_seed ^ 0x6d617472ull), 0};

  for (i64 k = 1; k <= max_rank; ++k) {
    PivotResult out = recursive_pivot_search(residual, *tree2, tree2->root(), &pool_l, &pool_r,
                                             nullptr, 0, rng.split(static_cast<u64>(k)));
    if (out.exhausted) break;
    if (std::abs(out.value) < tol) break;
    const i64 i = out.index[0];
    const i64 j = out.index[1];
    res.rows.push_back(i);
    res.cols.push_back(j);
    res.pivots.push_back(out.value);

    VecX col(n1), row(n2);
    parallel_for(n1, [&](i64 r) {
      const i64 idx[2] = {r + 1, j};
      col(r) = checked_eval(residual, idx);
    });
    parallel_for(n2, [&](i64 c) {
      const i64 idx[2] = {i, c + 1};
      row(c) = checked_eval(residual, idx);
    });
    const cplx invp = safeguarded_inverse(out.value);

    res.col_factors.conservativeResize(Eigen::NoChange, res.col_factors.cols() + 1);
    res.col_factors.col(res.col_factors.cols() - 1) = col;
    res.row_factors.conservativeResize(res.row_factors.rows() + 1, Eigen::NoChange);
    res.row_factors.row(res.row_factors.rows() - 1) = (invp * row).transpose();

    if (k == max_rank) {
      res.saturated = true;
      if (stats != nullptr) stats->rank_saturated = true;
    }
  }
  return res;
}

namespace {

struct HtacaCtx {
  const DimensionTree* top_tree = nullptr;
  std::vector<TreePtr> sub_trees;  // per node id, modes relabeled from 1
  const AcaParams* params = nullptr;
  AcaStats* stats = nullptr;
  double max_est = -1.0;
};

int extract_subtree(const DimensionTree& tree, int node, int mode_offset,
                    std::vector<DimensionTree::Node>& out) {
  const auto& n = tree.node(node);
  const int id = static_cast<int>(out.size());
  out.emplace_back();
  auto& copy = out[static_cast<size_t>(id)];
  copy.modes.reserve(n.modes.size());
  for (int m : n.modes) copy.modes.push_back(m - mode_offset);
  if (n.leaf()) return id;
  const int l = extract_subtree(tree, n.left, mode_offset, out);
  const int r = extract_subtree(tree, n.right, mode_offset, out);
  out[static_cast<size_t>(id)].left = l;
  out[static_cast<size_t>(id)].right = r;
  out[static_cast<size_t>(l)].parent = id;
  out[static_cast<size_t>(r)].parent = id;
  return id;
}

// Joins two subtree approximations (root rank 1 each) with a scalar root
// transfer into an approximation over the parent subtree.
HTTensor join_correction(const HTTensor& left, const HTTensor& right, TreePtr tree, cplx weight) {
  const int nl = left.tree().num_nodes();
  const int nr = right.tree().num_nodes();
  std::vector<MatX> frames(static_cast<size_t>(tree->num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(tree->num_nodes()));
  transfers[0] = MatX::Constant(1, 1, weight);
  for (int i = 0; i < nl; ++i) {
    if (left.tree().node(i).leaf())
      frames[static_cast<size_t>(1 + i)] = left.frame(i);
    else
      transfers[static_cast<size_t>(1 + i)] = left.transfer(i);
  }
  for (int i = 0; i < nr; ++i) {
    if (right.tree().node(i).leaf())
      frames[static_cast<size_t>(1 + nl + i)] = right.frame(i);
    else
      transfers[static_cast<size_t>(1 + nl + i)] = right.transfer(i);
  }
  std::vector<i64> shape = left.shape();
  shape.insert(shape.end(), right.shape().begin(), right.shape().end());
  return HTTensor(std::move(tree), std::move(shape), std::move(frames), std::move(transfers));
}

HTTensor htaca_rec(const EntryAccessor& acc, int node, HtacaCtx& ctx, CounterRng rng,
                   bool top_level) {
  const DimensionTree& tree = *ctx.top_tree;
  const auto& tnode = tree.node(node);
  TreePtr sub = ctx.sub_trees[static_cast<size_t>(node)];

  if (tnode.subtree_depth == 0) {
    // Leaf-level approximation: the vectorized fiber.
    const i64 n = acc.shape[0];
    MatX frame(n, 1);
    parallel_for(n, [&](i64 i) {
      const i64 idx[1] = {i + 1};
      frame(i, 0) = acc.eval(idx);
    });
    for (i64 i = 0; i < n; ++i) {
      if (!std::isfinite(frame(i, 0).real()) || !std::isfinite(frame(i, 0).imag()))
        throw std::runtime_error("htaca: non-finite accessor value encountered");
    }
    return HTTensor(std::move(sub), {n}, {std::move(frame)}, {MatX()});
  }

  const AcaParams& params = *ctx.params;
  const int kl = tree.node(tnode.left).order();
  const int k_order = tnode.order();
  const std::span<const i64> shape_l(acc.shape.data(), static_cast<size_t>(kl));
  const std::span<const i64> shape_r(acc.shape.data() + kl, static_cast<size_t>(k_order - kl));
  const i64 ml = product(shape_l);
  const i64 mr = product(shape_r);
  const i64 r_hash_max = params.r_hash_max > 0
                             ? params.r_hash_max
                             : 2 * std::min(params.r_max, std::min(ml, mr));
  const RankLimits limits = params.rank_limits();

  IndexPool pool_l{ml, {}}, pool_r{mr, {}};
  std::shared_ptr<HTTensor> approx;
  double local_norm_est = -1.0;
  cplx p{};
  bool first = true;
  i64 k = 1;

  while (true) {
    if (!first) {
      const double eps_c = pivot_tolerance(params, tree, node, std::max(ctx.max_est, 0.0));
      if (!(std::abs(p) > eps_c || k < params.r_hash_min)) break;
    }
    first = false;

    EntryAccessor residual = approx ? residual_accessor(acc, approx) : acc;
    PivotResult piv = recursive_pivot_search(residual, tree, node, &pool_l, &pool_r, nullptr, 0,
                                             rng.split(static_cast<u64>(2 * k)));
    if (piv.exhausted) {
      if (ctx.stats != nullptr) ctx.stats->pool_exhausted = true;
      break;
    }
    p = piv.value;
    if (top_level && ctx.stats != nullptr) ctx.stats->root_pivots.push_back(std::abs(p));
    if (ctx.max_est < 0.0) ctx.max_est = std::abs(p);

    MultiIndex left_multi(piv.index.begin(), piv.index.begin() + kl);
    MultiIndex right_multi(piv.index.begin() + kl, piv.index.end());
    EntryAccessor res_l = restrict_modes(residual, kl, right_multi);
    EntryAccessor res_r = restrict_modes(residual, 0, left_multi);

    CounterRng sub_rng = rng.split(static_cast<u64>(2 * k + 1));
    HTTensor corr_l = htaca_rec(res_l, tnode.left, ctx, sub_rng.split(1), false);
    HTTensor corr_r = htaca_rec(res_r, tnode.right, ctx, sub_rng.split(2), false);
    HTTensor corr = join_correction(corr_l, corr_r, sub, safeguarded_inverse(p));

    if (local_norm_est < 0.0) local_norm_est = ht_norm(corr);
    const double local_tol = 1e-14 * local_norm_est;
    if (!approx) {
      approx = std::make_shared<HTTensor>(ht_truncate(corr, local_tol, limits));
    } else {
      approx = std::make_shared<HTTensor>(ht_truncate(ht_add(*approx, corr), local_tol, limits));
    }

    if (k + 1 > r_hash_max) {
      if (ctx.stats != nullptr) ctx.stats->rank_saturated = true;
      break;
    }
    ++k;
  }

  if (!approx) {
    std::vector<i64> shape(acc.shape.begin(), acc.shape.end());
    approx = std::make_shared<HTTensor>(ht_zero(sub, std::move(shape)));
  }
  if (top_level) {
    const double norm = ht_norm(*approx);
    return ht_truncate(*approx, params.eps_base * norm, limits);
  }
  return *approx;
}

}  // namespace

HTTensor htaca(const EntryAccessor& acc, TreePtr tree, const AcaParams& params, AcaStats* stats) {
  params.validate();
  require(acc.dims() == tree->num_modes(), "htaca: accessor arity must match the tree");

  HtacaCtx ctx;
  ctx.top_tree = tree.get();
  ctx.params = &params;
  ctx.stats = stats;
  ctx.sub_trees.resize(static_cast<size_t>(tree->num_nodes()));
  for (int id = 0; id < tree->num_nodes(); ++id) {
    std::vector<DimensionTree::Node> nodes;
    extract_subtree(*tree, id, tree->node(id).modes.front() - 1, nodes);
    ctx.sub_trees[static_cast<size_t>(id)] =
        std::make_shared<const DimensionTree>(DimensionTree::from_nodes(std::move(nodes)));
  }

  EntryAccessor base = acc;
  if (stats != nullptr) base = counted_accessor(base, &stats->accessor_evals);
  CounterRng rng{CounterRng::mix(params.rng_seed ^ 0x68746163ull), 0};
  return htaca_rec(base, tree->root(), ctx, rng, true);
}

}  // namespace slar
