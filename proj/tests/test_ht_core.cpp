// SPDX-License-Identifier: Apache-2.0
#include <sstream>

#include <doctest.h>

#include "helpers.hpp"
#include "slar/ht_io.hpp"

using namespace slar;
using namespace slar::test;

TEST_SUITE_BEGIN("ht-core");

TEST_CASE("dimension tree construction") {
  auto t4 = DimensionTree::build(4, TreeStrategy::kBalanced);
  CHECK(t4.num_nodes() == 7);
  CHECK(t4.node(t4.root()).modes == std::vector<int>{1, 2, 3, 4});
  CHECK(t4.node(t4.node(t4.root()).left).modes == std::vector<int>{1, 2});
  CHECK(t4.node(t4.node(t4.root()).right).modes == std::vector<int>{3, 4});
  int nonleaf = 0;
  for (const auto& n : t4.nodes())
    if (!n.leaf()) ++nonleaf;
  CHECK(nonleaf == 3);
  CHECK(t4.depth() == 2);

  auto t6 = DimensionTree::build(6, TreeStrategy::kPairedUnbalanced);
  CHECK(t6.num_nodes() == 11);
  CHECK(t6.node(t6.node(t6.root()).left).modes == std::vector<int>{1, 2, 3, 4});
  CHECK(t6.node(t6.node(t6.root()).right).modes == std::vector<int>{5, 6});
  nonleaf = 0;
  for (const auto& n : t6.nodes())
    if (!n.leaf()) ++nonleaf;
  CHECK(nonleaf == 5);
  CHECK(t6.depth() == 3);

  auto t1 = DimensionTree::build(1, TreeStrategy::kBalanced);
  CHECK(t1.num_nodes() == 1);
  CHECK(t1.node(0).leaf());

  CHECK_THROWS_AS(DimensionTree::build(5, TreeStrategy::kPairedUnbalanced), ConfigError);
  CHECK_THROWS_AS(DimensionTree::build(0, TreeStrategy::kBalanced), ConfigError);
}

TEST_CASE("linearize matches column-major enumeration") {
  const std::vector<int> modes{1, 2, 3};
  const std::vector<i64> shape{2, 3, 4};
  CHECK(linearize(modes, shape, std::vector<i64>{2, 1, 3}) == 14);
  CHECK(linearize(modes, shape, std::vector<i64>{1, 1, 1}) == 1);

  // Oracle: position in column-major enumeration.
  i64 expected = 1;
  for_each_index(shape, [&](const MultiIndex& idx, i64) {
    CHECK(linearize(modes, shape, idx) == expected);
    ++expected;
  });

  CHECK_THROWS_AS(linearize(modes, shape, std::vector<i64>{3, 1, 1}), std::out_of_range);
}

TEST_CASE("linearize/delinearize round-trip on random indices") {
  CounterRng rng{123, 0};
  const std::vector<i64> shape{3, 5, 2, 7, 4};
  const std::vector<int> modes{1, 2, 3, 4, 5};
  for (int trial = 0; trial < 1000; ++trial) {
    MultiIndex idx = random_index(shape, rng);
    const i64 lin = linearize(modes, shape, idx);
    MultiIndex back(idx.size());
    delinearize(modes, shape, lin, back);
    CHECK(back == idx);
  }
}

TEST_CASE("vec of outer product equals kronecker product") {
  CounterRng rng{7, 0};
  for (i64 m : {1, 3, 8}) {
    for (i64 n : {1, 2, 5}) {
      const VecX u = random_vector(m, rng);
      const VecX v = random_vector(n, rng);
      const MatX outer = v * u.transpose();  // n x m
      const VecX vec = Eigen::Map<const VecX>(outer.data(), outer.size());
      // Kronecker u (x) v stacked explicitly.
      VecX kron(m * n);
      for (i64 i = 0; i < m; ++i)
        for (i64 j = 0; j < n; ++j) kron(i * n + j) = u(i) * v(j);
      CHECK((vec - kron).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("ht_entry: separable and zero tensors") {
  auto tree = build_tree(4, TreeStrategy::kBalanced);
  CounterRng rng{11, 0};
  std::vector<VecX> factors;
  for (i64 n : {4, 5, 3, 6}) factors.push_back(random_vector(n, rng));
  HTTensor t = ht_separable(tree, factors);
  CHECK(t.max_rank() == 1);
  for (int trial = 0; trial < 50; ++trial) {
    MultiIndex idx = random_index(t.shape(), rng);
    cplx expect = 1.0;
    for (size_t m = 0; m < idx.size(); ++m) expect *= factors[m](idx[m] - 1);
    CHECK(std::abs(ht_entry(t, idx) - expect) <= 1e-13 * std::abs(expect) + 1e-15);
  }
  HTTensor z = ht_zero(tree, {4, 5, 3, 6});
  for (int trial = 0; trial < 10; ++trial) {
    MultiIndex idx = random_index(z.shape(), rng);
    CHECK(ht_entry(z, idx) == cplx(0.0, 0.0));
  }
}

TEST_CASE("ht_entry agrees with ht_full on random tensors") {
  for (int d : {2, 3, 4}) {
    auto tree = build_tree(d, TreeStrategy::kBalanced);
    std::vector<i64> shape(static_cast<size_t>(d), 5);
    HTTensor t = random_ht(tree, shape, 3, 1000 + static_cast<u64>(d));
    DenseTensor full = ht_full(t);
    const double scale = dense_norm(full);
    CounterRng rng{55, 0};
    for (int trial = 0; trial < 100; ++trial) {
      MultiIndex idx = random_index(shape, rng);
      CHECK(std::abs(ht_entry(t, idx) - full.at(idx)) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("ht_full of one-mode tensor returns the frame column") {
  auto tree = build_tree(1, TreeStrategy::kBalanced);
  CounterRng rng{3, 0};
  const VecX u = random_vector(6, rng);
  HTTensor t = ht_separable(tree, {u});
  DenseTensor full = ht_full(t);
  for (i64 i = 0; i < 6; ++i) CHECK(full.values[static_cast<size_t>(i)] == u(i));
}

TEST_CASE("ht_add and ht_scale against the dense oracle") {
  auto tree = build_tree(4, TreeStrategy::kBalanced);
  const std::vector<i64> shape{4, 3, 5, 4};
  HTTensor a = random_ht(tree, shape, 3, 21);
  HTTensor b = random_ht(tree, shape, 2, 22);
  DenseTensor da = ht_full(a);
  DenseTensor db = ht_full(b);

  HTTensor sum = ht_add(a, b);
  DenseTensor dsum = ht_full(sum);
  double scale = dense_norm(da) + dense_norm(db);
  for (size_t i = 0; i < dsum.values.size(); ++i)
    CHECK(std::abs(dsum.values[i] - (da.values[i] + db.values[i])) <= 1e-12 * scale);
  for (int id = 0; id < tree->num_nodes(); ++id) {
    if (id == tree->root()) continue;
    CHECK(sum.rank(id) == a.rank(id) + b.rank(id));
  }

  HTTensor zero = ht_zero(tree, shape);
  DenseTensor dz = ht_full(ht_add(a, zero));
  CHECK(dense_max_abs_diff(dz, da) <= 1e-13 * scale);

  DenseTensor dzero = ht_full(ht_scale(a, 0.0));
  for (const cplx& v : dzero.values) CHECK(v == cplx(0.0, 0.0));

  const cplx c(0.5, -1.25);
  DenseTensor dscaled = ht_full(ht_scale(a, c));
  for (size_t i = 0; i < dscaled.values.size(); ++i)
    CHECK(std::abs(dscaled.values[i] - c * da.values[i]) <= 1e-13 * scale);
}

TEST_CASE("ht_norm") {
  auto tree = build_tree(4, TreeStrategy::kBalanced);
  const std::vector<i64> shape{4, 5, 3, 4};
  CHECK(ht_norm(ht_zero(tree, shape)) == 0.0);

  // Separable tensor with unit-norm factors has norm one.
  CounterRng rng{31, 0};
  std::vector<VecX> factors;
  for (i64 n : shape) {
    VecX f = random_vector(n, rng);
    factors.push_back(f / f.norm());
  }
  CHECK(ht_norm(ht_separable(tree, factors)) == doctest::Approx(1.0).epsilon(1e-12));

  for (u64 seed : {41u, 42u, 43u}) {
    HTTensor t = random_ht(tree, shape, 3, seed);
    const double dense = dense_norm(ht_full(t));
    CHECK(ht_norm(t) == doctest::Approx(dense).epsilon(1e-10));
  }
}

TEST_CASE("storage count formula for uniform ranks") {
  for (auto [d, strategy] : std::vector<std::pair<int, TreeStrategy>>{
           {2, TreeStrategy::kBalanced},
           {4, TreeStrategy::kBalanced},
           {5, TreeStrategy::kBalanced},
           {6, TreeStrategy::kPairedUnbalanced}}) {
    auto tree = build_tree(d, strategy);
    const i64 n = 6, r = 3;
    std::vector<MatX> frames(static_cast<size_t>(tree->num_nodes()));
    std::vector<MatX> transfers(static_cast<size_t>(tree->num_nodes()));
    for (int id = 0; id < tree->num_nodes(); ++id) {
      const auto& node = tree->node(id);
      const i64 cols = id == tree->root() ? 1 : r;
      if (node.leaf())
        frames[static_cast<size_t>(id)] = MatX::Ones(n, cols);
      else
        transfers[static_cast<size_t>(id)] = MatX::Ones(r * r, cols);
    }
    // Uniform leaf rank needs the root handled separately for d = 2.
    if (d == 2) {
      frames[1] = MatX::Ones(n, r);
      frames[2] = MatX::Ones(n, r);
    }
    HTTensor t(tree, std::vector<i64>(static_cast<size_t>(d), n), std::move(frames),
               std::move(transfers));
    CHECK(t.storage_count() == d * n * r + (d - 2) * r * r * r + r * r);
  }
}

TEST_CASE("leaf_transform against the dense mode-product oracle") {
  auto tree = build_tree(3, TreeStrategy::kBalanced);
  const std::vector<i64> shape{4, 5, 3};
  HTTensor t = random_ht(tree, shape, 3, 77);
  DenseTensor dt = ht_full(t);
  CounterRng rng{78, 0};

  SUBCASE("identity leaves the tensor unchanged") {
    HTTensor u = leaf_transform(t, 2, MatX::Identity(5, 5));
    CHECK(dense_max_abs_diff(ht_full(u), dt) == 0.0);
  }
  SUBCASE("random rectangular matrix") {
    const MatX m = random_matrix(6, 4, rng);
    HTTensor u = leaf_transform(t, 1, m);
    CHECK(u.shape()[0] == 6);
    DenseTensor du = ht_full(u);
    // Dense oracle: apply the matrix along mode 1 by explicit summation.
    for_each_index(du.shape, [&](const MultiIndex& idx, i64) {
      cplx expect = 0.0;
      MultiIndex src = idx;
      for (i64 j = 1; j <= 4; ++j) {
        src[0] = j;
        expect += m(idx[0] - 1, j - 1) * dt.at(src);
      }
      CHECK(std::abs(du.at(idx) - expect) <= 1e-12 * (1.0 + std::abs(expect)));
    });
    CHECK_THROWS(leaf_transform(t, 2, m));  // dimension mismatch
  }
  SUBCASE("diagonal scaling of a separable factor") {
    std::vector<VecX> factors{random_vector(4, rng), random_vector(5, rng), random_vector(3, rng)};
    HTTensor s = ht_separable(tree, factors);
    VecX diag = random_vector(5, rng);
    HTTensor scaled = scale_leaf_rows(s, 2, diag);
    for (int trial = 0; trial < 20; ++trial) {
      MultiIndex idx = random_index(shape, rng);
      const cplx expect =
          factors[0](idx[0] - 1) * diag(idx[1] - 1) * factors[1](idx[1] - 1) * factors[2](idx[2] - 1);
      CHECK(std::abs(ht_entry(scaled, idx) - expect) <= 1e-13 * (1.0 + std::abs(expect)));
    }
  }
}

TEST_CASE("contract_mode") {
  auto tree = build_tree(3, TreeStrategy::kBalanced);
  const std::vector<i64> shape{4, 6, 3};
  HTTensor t = random_ht(tree, shape, 3, 91);
  DenseTensor dt = ht_full(t);

  SUBCASE("unit weight extracts a slice") {
    std::vector<cplx> w(6, 0.0);
    w[0] = 1.0;
    HTTensor c = contract_mode(t, 2, w);
    CHECK(c.shape()[1] == 1);
    for_each_index({4, 3}, [&](const MultiIndex& idx, i64) {
      const MultiIndex full{idx[0], 1, idx[1]};
      const MultiIndex red{idx[0], 1, idx[1]};
      CHECK(std::abs(ht_entry(c, red) - dt.at(full)) <= 1e-12);
    });
  }
  SUBCASE("midpoint quadrature of a gaussian factor") {
    // Mode 2 holds exp(-v^2/2) on a symmetric box; uniform weights dv give
    // the midpoint-rule integral.
    const i64 nv = 64;
    const double vmax = 2.0 * M_PI;
    const double dv = 2.0 * vmax / static_cast<double>(nv);
    VecX gauss(nv);
    for (i64 j = 0; j < nv; ++j) {
      const double v = -vmax + (static_cast<double>(j) + 0.5) * dv;
      gauss(j) = std::exp(-0.5 * v * v);
    }
    auto tree2 = build_tree(2, TreeStrategy::kBalanced);
    CounterRng rng{5, 0};
    std::vector<VecX> factors{random_vector(5, rng), gauss};
    HTTensor s = ht_separable(tree2, factors);
    std::vector<cplx> w(static_cast<size_t>(nv), dv);
    HTTensor c = contract_mode(s, 2, w);
    cplx quad = 0.0;
    for (i64 j = 0; j < nv; ++j) quad += gauss(j) * dv;
    for (i64 i = 1; i <= 5; ++i) {
      const MultiIndex idx{i, 1};
      const cplx expect = factors[0](i - 1) * quad;
      CHECK(std::abs(ht_entry(c, idx) - expect) <= 1e-12 * std::abs(expect));
    }
  }
  SUBCASE("zero weights give the zero tensor") {
    std::vector<cplx> w(6, 0.0);
    HTTensor c = contract_mode(t, 2, w);
    CounterRng rng{6, 0};
    for (int trial = 0; trial < 10; ++trial) {
      MultiIndex idx = random_index(c.shape(), rng);
      CHECK(std::abs(ht_entry(c, idx)) == 0.0);
    }
  }
}

TEST_CASE("squeeze removes unit modes") {
  auto tree = build_tree(4, TreeStrategy::kBalanced);
  const std::vector<i64> shape{4, 3, 5, 2};
  HTTensor t = random_ht(tree, shape, 3, 121);

  // Contract modes 2 and 4 to size one, then squeeze them away.
  std::vector<cplx> w2(3, cplx(0.3, 0.1));
  std::vector<cplx> w4(2, cplx(-0.7, 0.4));
  HTTensor c = contract_mode(contract_mode(t, 2, w2), 4, w4);
  const std::vector<int> squeeze_modes{2, 4};
  HTTensor s = squeeze(c, squeeze_modes);

  CHECK(s.dims() == 2);
  CHECK(s.shape() == std::vector<i64>{4, 5});
  DenseTensor dc = ht_full(c);
  const double scale = dense_norm(dc) + 1.0;
  for_each_index(s.shape(), [&](const MultiIndex& idx, i64) {
    const MultiIndex full{idx[0], 1, idx[1], 1};
    CHECK(std::abs(ht_entry(s, idx) - dc.at(full)) <= 1e-12 * scale);
  });

  SUBCASE("squeezing nothing is the identity") {
    HTTensor same = squeeze(t, std::vector<int>{});
    CHECK(dense_max_abs_diff(ht_full(same), ht_full(t)) == 0.0);
  }
  SUBCASE("squeeze rejects modes of size > 1") {
    CHECK_THROWS(squeeze(t, std::vector<int>{2}));
  }
}

TEST_CASE("hsvd truncation") {
  auto tree = build_tree(4, TreeStrategy::kBalanced);
  const std::vector<i64> shape{6, 5, 6, 5};

  SUBCASE("lossless on an exact low-rank tensor") {
    HTTensor t = random_ht(tree, shape, 3, 200);
    DenseTensor dt = ht_full(t);
    HTTensor u = ht_truncate(t, 0.0, RankLimits{});
    CHECK(dense_max_abs_diff(ht_full(u), dt) <= 1e-12 * dense_norm(dt));
    for (int id = 0; id < tree->num_nodes(); ++id) CHECK(u.rank(id) <= t.rank(id));
  }
  SUBCASE("frobenius error within the absolute budget") {
    for (u64 seed : {301u, 302u, 303u, 304u}) {
      HTTensor t = random_ht(tree, shape, 4, seed);
      DenseTensor dt = ht_full(t);
      const double tol = 0.05 * dense_norm(dt);
      HTTensor u = ht_truncate(t, tol, RankLimits{});
      CHECK(dense_frob_diff(ht_full(u), dt) <= tol);
      for (int id = 0; id < tree->num_nodes(); ++id) CHECK(u.rank(id) <= t.rank(id));
    }
  }
  SUBCASE("rank cap of one forces all node ranks to one") {
    HTTensor t = random_ht(tree, shape, 3, 400);
    HTTensor u = ht_truncate(t, 0.0, RankLimits::uniform(1, 1));
    for (int id = 0; id < tree->num_nodes(); ++id) CHECK(u.rank(id) == 1);
  }
}

TEST_CASE("span equivalence at every non-leaf node") {
  // The alpha-matricization of the dense reconstruction must lie in the span
  // of kron(U_right, U_left) built from dense child frames.
  auto tree = build_tree(4, TreeStrategy::kBalanced);
  const std::vector<i64> shape{4, 3, 4, 3};
  HTTensor t = random_ht(tree, shape, 3, 510);
  DenseTensor dt = ht_full(t);

  // Dense per-node frames, bottom-up.
  std::vector<MatX> full(static_cast<size_t>(tree->num_nodes()));
  for (int id : tree->bottom_up()) {
    const auto& node = tree->node(id);
    if (node.leaf()) {
      full[static_cast<size_t>(id)] = t.frame(id);
      continue;
    }
    const MatX& fl = full[static_cast<size_t>(node.left)];
    const MatX& fr = full[static_cast<size_t>(node.right)];
    const MatX& b = t.transfer(id);
    MatX out(fl.rows() * fr.rows(), b.cols());
    for (i64 c = 0; c < b.cols(); ++c) {
      MatX mc = Eigen::Map<const MatX>(b.col(c).data(), fl.cols(), fr.cols());
      MatX slab = fl * mc * fr.transpose();
      out.col(c) = Eigen::Map<const VecX>(slab.data(), slab.size());
    }
    full[static_cast<size_t>(id)] = out;
  }

  for (int id = 0; id < tree->num_nodes(); ++id) {
    const auto& node = tree->node(id);
    if (node.leaf() || id == tree->root()) continue;
    // kron(U_r, U_l): column (cl, cr) -> row (il, ir).
    const MatX& ul = full[static_cast<size_t>(node.left)];
    const MatX& ur = full[static_cast<size_t>(node.right)];
    MatX kron(ul.rows() * ur.rows(), ul.cols() * ur.cols());
    for (i64 cr = 0; cr < ur.cols(); ++cr)
      for (i64 cl = 0; cl < ul.cols(); ++cl)
        for (i64 ir = 0; ir < ur.rows(); ++ir)
          for (i64 il = 0; il < ul.rows(); ++il)
            kron(il + ir * ul.rows(), cl + cr * ul.cols()) = ul(il, cl) * ur(ir, cr);

    // alpha-matricization of the dense tensor.
    const auto& modes = node.modes;
    std::vector<int> comp;
    for (int m = 1; m <= 4; ++m)
      if (std::find(modes.begin(), modes.end(), m) == modes.end()) comp.push_back(m);
    i64 rows = 1, cols = 1;
    for (int m : modes) rows *= shape[static_cast<size_t>(m - 1)];
    for (int m : comp) cols *= shape[static_cast<size_t>(m - 1)];
    MatX mat(rows, cols);
    for_each_index(shape, [&](const MultiIndex& idx, i64) {
      std::vector<i64> ridx, cidx;
      for (int m : modes) ridx.push_back(idx[static_cast<size_t>(m - 1)]);
      for (int m : comp) cidx.push_back(idx[static_cast<size_t>(m - 1)]);
      const i64 r = linearize(modes, shape, ridx) - 1;
      const i64 c = linearize(comp, shape, cidx) - 1;
      mat(r, c) = dt.at(idx);
    });

    // Residual after projection onto span(kron).
    Eigen::CompleteOrthogonalDecomposition<MatX> cod(kron);
    MatX resid = mat - kron * cod.solve(mat);
    CHECK(resid.norm() <= 1e-10 * (1.0 + mat.norm()));
  }
}

TEST_CASE("serialization round-trip is bit exact") {
  auto tree = build_tree(4, TreeStrategy::kBalanced);
  const std::vector<i64> shape{4, 3, 5, 2};
  HTTensor t = random_ht(tree, shape, 3, 600);

  std::stringstream buf;
  save_ht(buf, t, nlohmann::json{{"note", "round-trip"}});
  const std::string first = buf.str();

  std::stringstream input(first);
  LoadedHt loaded = load_ht(input);
  CHECK(loaded.meta.at("note") == "round-trip");
  CHECK(loaded.tensor.shape() == t.shape());
  CHECK(loaded.tensor.tree().same_structure(t.tree()));
  for (int id = 0; id < tree->num_nodes(); ++id) {
    if (tree->node(id).leaf()) {
      CHECK(loaded.tensor.frame(id) == t.frame(id));
    } else {
      CHECK(loaded.tensor.transfer(id) == t.transfer(id));
    }
  }

  std::stringstream again;
  save_ht(again, loaded.tensor, loaded.meta);
  CHECK(again.str() == first);
}

TEST_SUITE_END();
