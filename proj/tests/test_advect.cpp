// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "helpers.hpp"
#include "slar/advect.hpp"

using namespace slar;
using namespace slar::test;

namespace {

PhaseSpaceGrid box_grid_2d(i64 n, double lo, double hi, BoundaryKind kind) {
  PhaseSpaceGrid g;
  g.modes = {GridMode{lo, hi, n, kind, ModeRole::kSpatial},
             GridMode{lo, hi, n, kind, ModeRole::kSpatial}};
  return g;
}

VelocityField rotation_field() {
  VelocityField f;
  f.eval = [](std::span<const double> x, double, std::span<double> a) {
    a[0] = -x[1];
    a[1] = x[0];
  };
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("sl-advect");

TEST_CASE("trace_rk3: constant and zero fields") {
  PhaseSpaceGrid grid = box_grid_2d(32, -10.0, 10.0, BoundaryKind::kTruncatedBox);
  VelocityField constant;
  constant.eval = [](std::span<const double>, double, std::span<double> a) {
    a[0] = 1.5;
    a[1] = -0.25;
  };
  const std::vector<double> x{0.3, 0.7};
  const double dt = 0.125;
  std::vector<double> foot = trace_rk3(x, dt, 0.0, constant, grid);
  CHECK(foot[0] == doctest::Approx(0.3 - 1.5 * dt).epsilon(1e-14));
  CHECK(foot[1] == doctest::Approx(0.7 + 0.25 * dt).epsilon(1e-14));

  VelocityField zero;
  zero.eval = [](std::span<const double>, double, std::span<double> a) { a[0] = a[1] = 0.0; };
  foot = trace_rk3(x, dt, 0.0, zero, grid);
  CHECK(foot[0] == 0.3);
  CHECK(foot[1] == 0.7);
}

TEST_CASE("trace_rk3: fourth-order local error on the rotation field") {
  PhaseSpaceGrid grid = box_grid_2d(32, -10.0, 10.0, BoundaryKind::kTruncatedBox);
  const std::vector<double> x{1.0, 0.5};
  auto foot_error = [&](double dt) {
    const std::vector<double> foot = trace_rk3(x, dt, 0.0, rotation_field(), grid);
    // Exact backward rotation by dt.
    const double c = std::cos(-dt), s = std::sin(-dt);
    const double ex = c * x[0] - s * x[1];
    const double ey = s * x[0] + c * x[1];
    return std::max(std::abs(foot[0] - ex), std::abs(foot[1] - ey));
  };
  const double e1 = foot_error(0.2);
  const double e2 = foot_error(0.1);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.25));
}

TEST_CASE("trace_rk3 clamps at the velocity box and counts it") {
  PhaseSpaceGrid grid;
  grid.modes = {GridMode{-1.0, 1.0, 16, BoundaryKind::kTruncatedBox, ModeRole::kVelocity}};
  VelocityField push;
  push.eval = [](std::span<const double>, double, std::span<double> a) { a[0] = -10.0; };
  std::atomic<i64> clamps{0};
  const std::vector<double> x{0.9};
  std::vector<double> foot = trace_rk3(x, 0.5, 0.0, push, grid, &clamps);
  CHECK(foot[0] == 1.0);
  CHECK(clamps.load() == 1);
}

TEST_CASE("locate_cell") {
  PhaseSpaceGrid grid;
  grid.modes = {GridMode{0.0, 1.0, 10, BoundaryKind::kPeriodic, ModeRole::kSpatial}};

  SUBCASE("cell centers map to their own cell") {
    for (i64 i = 1; i <= 10; ++i) {
      const double x[1] = {grid.mode(1).center(i)};
      CHECK(locate_cell(std::span<const double>(x, 1), grid)[0] == i);
    }
  }
  SUBCASE("faces resolve to the lower cell") {
    const double x[1] = {0.3};  // face between cells 3 and 4
    CHECK(locate_cell(std::span<const double>(x, 1), grid)[0] == 3);
  }
  SUBCASE("random feet lie within half a spacing of the returned center") {
    CounterRng rng{9, 0};
    for (int trial = 0; trial < 1000; ++trial) {
      const double x[1] = {rng.uniform01()};
      const i64 i = locate_cell(std::span<const double>(x, 1), grid)[0];
      // Brute-force nearest-center check.
      CHECK(std::abs(x[0] - grid.mode(1).center(i)) <= 0.5 * grid.mode(1).spacing() + 1e-14);
    }
  }
}

TEST_CASE("p2 coefficients") {
  SUBCASE("constant data has only the constant term") {
    const int d = 3;
    std::vector<double> stencil(static_cast<size_t>(p2_stencil_size(d)), 4.25);
    const auto c = p2_coefficients<double>(stencil, d);
    CHECK(c.a0 == 4.25);
    for (double v : c.lin) CHECK(v == 0.0);
    for (double v : c.quad) CHECK(v == 0.0);
    for (double v : c.cross) CHECK(v == 0.0);
  }
  SUBCASE("coefficient and stencil counts") {
    CHECK(p2_coefficient_count(4) == 15);
    CHECK(p2_stencil_size(4) == 33);
    CHECK(p2_coefficient_count(6) == 28);
    CHECK(p2_stencil_size(6) == 73);
  }
  SUBCASE("reproduces quadratics with cross terms exactly") {
    const int d = 4;
    // f(x) = sum x_mu^2 + sum_{mu<nu} x_mu x_nu on a unit-spaced grid around 0.
    auto f = [&](std::span<const double> x) {
      double v = 0.0;
      for (int m = 0; m < d; ++m) v += x[static_cast<size_t>(m)] * x[static_cast<size_t>(m)];
      for (int m = 0; m < d; ++m)
        for (int n = m + 1; n < d; ++n) v += x[static_cast<size_t>(m)] * x[static_cast<size_t>(n)];
      return v;
    };
    std::vector<double> stencil(static_cast<size_t>(p2_stencil_size(d)));
    auto point = [&](int mu, int dmu, int nu, int dnu) {
      std::vector<double> x(static_cast<size_t>(d), 0.0);
      if (mu > 0) x[static_cast<size_t>(mu - 1)] = dmu;
      if (nu > 0) x[static_cast<size_t>(nu - 1)] = dnu;
      return f(x);
    };
    stencil[0] = point(0, 0, 0, 0);
    for (int mu = 1; mu <= d; ++mu) {
      stencil[static_cast<size_t>(1 + 2 * (mu - 1))] = point(mu, +1, 0, 0);
      stencil[static_cast<size_t>(2 + 2 * (mu - 1))] = point(mu, -1, 0, 0);
    }
    for (int mu = 1; mu <= d; ++mu)
      for (int nu = mu + 1; nu <= d; ++nu) {
        const i64 b = 1 + 2 * d + 4 * p2_pair_index(mu, nu, d);
        stencil[static_cast<size_t>(b + 0)] = point(mu, +1, nu, +1);
        stencil[static_cast<size_t>(b + 1)] = point(mu, -1, nu, -1);
        stencil[static_cast<size_t>(b + 2)] = point(mu, +1, nu, -1);
        stencil[static_cast<size_t>(b + 3)] = point(mu, -1, nu, +1);
      }
    const auto c = p2_coefficients<double>(stencil, d);
    CounterRng rng{21, 0};
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> xi(static_cast<size_t>(d));
      for (int m = 0; m < d; ++m) xi[static_cast<size_t>(m)] = rng.uniform01() - 0.5;
      CHECK(std::abs(p2_evaluate<double>(c, xi) - f(xi)) <= 1e-12);
    }
  }
  SUBCASE("incomplete stencil is rejected") {
    std::vector<double> bad(5, 0.0);
    CHECK_THROWS(p2_coefficients<double>(bad, 3));
  }
}

TEST_CASE("p2 evaluation basics") {
  P2Coefficients<double> c;
  c.d = 2;
  c.a0 = 3.5;
  c.lin = {1.0, 0.0};
  c.quad = {0.0, 0.0};
  c.cross = {0.0};
  const double zero[2] = {0.0, 0.0};
  CHECK(p2_evaluate(c, std::span<const double>(zero, 2)) == 3.5);
  const double q[2] = {0.25, 0.0};
  CHECK(p2_evaluate(c, std::span<const double>(q, 2)) == 3.75);
}

TEST_CASE("stencil evaluator matches per-entry evaluation") {
  auto tree = build_tree(4, TreeStrategy::kBalanced);
  const std::vector<i64> shape{6, 5, 7, 4};
  auto t = std::make_shared<const HTTensor>(random_ht(tree, shape, 3, 50));
  HtStencilEvaluator eval(t);
  CounterRng rng{51, 0};
  EntryWorkspace ws;
  for (int trial = 0; trial < 20; ++trial) {
    MultiIndex center(4);
    for (int m = 0; m < 4; ++m)
      center[static_cast<size_t>(m)] =
          2 + static_cast<i64>(rng.below(static_cast<u64>(shape[static_cast<size_t>(m)] - 2)));
    std::vector<i64> rows(12);
    for (int m = 0; m < 4; ++m)
      for (int k = 0; k < 3; ++k)
        rows[static_cast<size_t>(3 * m + k)] = center[static_cast<size_t>(m)] + (k - 1);
    std::vector<cplx> out(static_cast<size_t>(p2_stencil_size(4)));
    eval.evaluate(rows, out);

    auto value_at = [&](MultiIndex idx) { return ht_entry(*t, idx, ws); };
    CHECK(std::abs(out[0] - value_at(center)) <= 1e-12);
    for (int mu = 1; mu <= 4; ++mu) {
      MultiIndex plus = center, minus = center;
      plus[static_cast<size_t>(mu - 1)] += 1;
      minus[static_cast<size_t>(mu - 1)] -= 1;
      CHECK(std::abs(out[static_cast<size_t>(1 + 2 * (mu - 1))] - value_at(plus)) <= 1e-12);
      CHECK(std::abs(out[static_cast<size_t>(2 + 2 * (mu - 1))] - value_at(minus)) <= 1e-12);
    }
    for (int mu = 1; mu <= 4; ++mu)
      for (int nu = mu + 1; nu <= 4; ++nu) {
        const i64 b = 1 + 8 + 4 * p2_pair_index(mu, nu, 4);
        const int signs[4][2] = {{+1, +1}, {-1, -1}, {+1, -1}, {-1, +1}};
        for (int s = 0; s < 4; ++s) {
          MultiIndex idx = center;
          idx[static_cast<size_t>(mu - 1)] += signs[s][0];
          idx[static_cast<size_t>(nu - 1)] += signs[s][1];
          CHECK(std::abs(out[static_cast<size_t>(b + s)] - value_at(idx)) <= 1e-12);
        }
      }
  }
}

TEST_CASE("sl accessor: zero field is the identity transport") {
  auto tree = build_tree(2, TreeStrategy::kBalanced);
  PhaseSpaceGrid grid;
  grid.modes = {GridMode{0.0, 2.0 * M_PI, 16, BoundaryKind::kPeriodic, ModeRole::kSpatial},
                GridMode{-3.0, 3.0, 12, BoundaryKind::kTruncatedBox, ModeRole::kVelocity}};
  auto f = std::make_shared<const HTTensor>(random_ht(tree, grid.shape(), 3, 60));
  VelocityField zero;
  zero.eval = [](std::span<const double>, double, std::span<double> a) {
    for (auto& v : a) v = 0.0;
  };
  EntryAccessor acc = sl_accessor(f, grid, 0.0, 0.5, zero);
  CounterRng rng{61, 0};
  for (int trial = 0; trial < 50; ++trial) {
    MultiIndex idx = random_index(f->shape(), rng);
    CHECK(std::abs(acc.eval(idx) - ht_entry(*f, idx)) <= 1e-13);
  }
}

TEST_CASE("sl accessor: one-cell shift on a periodic grid") {
  auto tree = build_tree(1, TreeStrategy::kBalanced);
  const i64 n = 24;
  PhaseSpaceGrid grid;
  grid.modes = {GridMode{0.0, 1.0, n, BoundaryKind::kPeriodic, ModeRole::kSpatial}};
  CounterRng rng{62, 0};
  auto f = std::make_shared<const HTTensor>(ht_separable(tree, {random_vector(n, rng)}));

  const double dt = 0.25;
  const double speed = grid.mode(1).spacing() / dt;
  VelocityField field;
  field.eval = [speed](std::span<const double>, double, std::span<double> a) { a[0] = speed; };
  EntryAccessor acc = sl_accessor(f, grid, 0.0, dt, field);
  for (i64 i = 1; i <= n; ++i) {
    const MultiIndex idx{i};
    const MultiIndex prev{(i - 2 + n) % n + 1};
    CHECK(std::abs(acc.eval(idx) - ht_entry(*f, prev)) <= 1e-12);
  }
}

TEST_CASE("sl accessor: one rotation step converges at third order") {
  // Rigid rotation of an offset gaussian; exact stencil data, one step.
  auto tree = build_tree(2, TreeStrategy::kBalanced);
  auto gaussian = [&](double x, double y) {
    const double cx = 0.4, sigma = 0.35;
    return std::exp(-((x - cx) * (x - cx) + y * y) / (2.0 * sigma * sigma));
  };
  auto run_level = [&](i64 n) {
    PhaseSpaceGrid grid = box_grid_2d(n, -M_PI, M_PI, BoundaryKind::kTruncatedBox);
    VecX gx(n), gy(n);
    const double cx = 0.4, sigma = 0.35;
    for (i64 i = 1; i <= n; ++i) {
      const double x = grid.mode(1).center(i);
      gx(i - 1) = std::exp(-(x - cx) * (x - cx) / (2.0 * sigma * sigma));
      gy(i - 1) = std::exp(-x * x / (2.0 * sigma * sigma));
    }
    auto f = std::make_shared<const HTTensor>(ht_separable(tree, {gx, gy}));
    const double dt = 2.0 * M_PI / static_cast<double>(n);  // dt ~ h
    EntryAccessor acc = sl_accessor(f, grid, 0.0, dt, rotation_field());
    double err2 = 0.0;
    for (i64 j = 1; j <= n; ++j) {
      for (i64 i = 1; i <= n; ++i) {
        const double x = grid.mode(1).center(i);
        const double y = grid.mode(2).center(j);
        // Exact solution: rotate backward by dt.
        const double c = std::cos(-dt), s = std::sin(-dt);
        const double exact = gaussian(c * x - s * y, s * x + c * y);
        const MultiIndex idx{i, j};
        const double diff = acc.eval(idx).real() - exact;
        err2 += diff * diff;
      }
    }
    return std::sqrt(err2 * grid.cell_volume());
  };
  const double e1 = run_level(24);
  const double e2 = run_level(48);
  const double order = std::log2(e1 / e2);
  CHECK(order >= 2.5);
  CHECK(order <= 4.5);
}

TEST_CASE("sl accessor: periodic wrap consistency under index shifts") {
  auto tree = build_tree(2, TreeStrategy::kBalanced);
  const i64 n = 12;
  PhaseSpaceGrid grid;
  grid.modes = {GridMode{0.0, 1.0, n, BoundaryKind::kPeriodic, ModeRole::kSpatial},
                GridMode{0.0, 1.0, n, BoundaryKind::kPeriodic, ModeRole::kSpatial}};
  HTTensor f = random_ht(tree, grid.shape(), 2, 63);

  // g(i, j) = f(i-1 mod n, j): frame rows of mode 1 rotated down by one.
  std::vector<MatX> frames(3);
  std::vector<MatX> transfers(3);
  for (int id = 0; id < f.tree().num_nodes(); ++id) {
    if (f.tree().node(id).leaf())
      frames[static_cast<size_t>(id)] = f.frame(id);
    else
      transfers[static_cast<size_t>(id)] = f.transfer(id);
  }
  const int leaf1 = f.tree().leaf_of_mode(1);
  MatX rotated(n, f.frame(leaf1).cols());
  for (i64 i = 0; i < n; ++i) rotated.row(i) = f.frame(leaf1).row((i - 1 + n) % n);
  frames[static_cast<size_t>(leaf1)] = rotated;
  auto g = std::make_shared<const HTTensor>(HTTensor(f.tree_ptr(), f.shape(), std::move(frames),
                                                     std::move(transfers)));
  auto fp = std::make_shared<const HTTensor>(f);

  VelocityField field;
  field.eval = [](std::span<const double>, double, std::span<double> a) {
    a[0] = 0.37;
    a[1] = -0.21;
  };
  EntryAccessor af = sl_accessor(fp, grid, 0.0, 0.3, field);
  EntryAccessor ag = sl_accessor(g, grid, 0.0, 0.3, field);
  CounterRng rng{64, 0};
  for (int trial = 0; trial < 40; ++trial) {
    MultiIndex idx = random_index(f.shape(), rng);
    MultiIndex shifted = idx;
    shifted[0] = idx[0] % n + 1;
    CHECK(std::abs(af.eval(idx) - ag.eval(shifted)) <= 1e-12);
  }
}

TEST_CASE("sl accessor purity: repeated evaluation is bit identical") {
  auto tree = build_tree(2, TreeStrategy::kBalanced);
  PhaseSpaceGrid grid;
  grid.modes = {GridMode{0.0, 2.0 * M_PI, 16, BoundaryKind::kPeriodic, ModeRole::kSpatial},
                GridMode{-3.0, 3.0, 16, BoundaryKind::kTruncatedBox, ModeRole::kVelocity}};
  auto f = std::make_shared<const HTTensor>(random_ht(tree, grid.shape(), 3, 65));
  VelocityField field;
  field.eval = [](std::span<const double> x, double, std::span<double> a) {
    a[0] = x[1];
    a[1] = -0.5 * std::sin(x[0]);
  };
  EntryAccessor acc = sl_accessor(f, grid, 0.0, 0.21, field);
  CounterRng rng{66, 0};
  for (int trial = 0; trial < 25; ++trial) {
    MultiIndex idx = random_index(f->shape(), rng);
    const cplx a = acc.eval(idx);
    const cplx b = acc.eval(idx);
    CHECK(a.real() == b.real());
    CHECK(a.imag() == b.imag());
  }
}

TEST_CASE("off-grid field evaluation") {
  auto tree = build_tree(1, TreeStrategy::kBalanced);

  SUBCASE("grid centers and constants are exact") {
    const i64 n = 16;
    PhaseSpaceGrid spatial;
    spatial.modes = {GridMode{0.0, 2.0 * M_PI, n, BoundaryKind::kPeriodic, ModeRole::kSpatial}};
    CounterRng rng{70, 0};
    VecX vals = random_vector(n, rng);
    HTTensor e = ht_separable(tree, {vals});
    const HTTensor* ep = &e;
    for (i64 i = 1; i <= n; ++i) {
      const double x[1] = {spatial.mode(1).center(i)};
      const auto out = eval_field_offgrid(std::span<const HTTensor* const>(&ep, 1),
                                          std::span<const double>(x, 1), spatial);
      CHECK(out[0] == doctest::Approx(vals(i - 1).real()).epsilon(1e-13));
    }
    HTTensor c = ht_separable(tree, {VecX::Constant(n, 2.25)});
    const HTTensor* cp = &c;
    for (double x : {0.1, 1.7, 4.4, 6.1}) {
      const double xq[1] = {x};
      CHECK(eval_field_offgrid(std::span<const HTTensor* const>(&cp, 1),
                               std::span<const double>(xq, 1), spatial)[0] ==
            doctest::Approx(2.25).epsilon(1e-13));
    }
  }
  SUBCASE("sinusoid error decays at third order") {
    auto level_error = [&](i64 n) {
      PhaseSpaceGrid sg;
      sg.modes = {GridMode{0.0, 2.0 * M_PI, n, BoundaryKind::kPeriodic, ModeRole::kSpatial}};
      VecX vals(n);
      for (i64 i = 1; i <= n; ++i) vals(i - 1) = std::sin(sg.mode(1).center(i));
      HTTensor e = ht_separable(build_tree(1, TreeStrategy::kBalanced), {vals});
      const HTTensor* ep = &e;
      double err = 0.0;
      CounterRng rng{71, 0};
      for (int q = 0; q < 200; ++q) {
        const double x[1] = {rng.uniform01() * 2.0 * M_PI};
        const auto out = eval_field_offgrid(std::span<const HTTensor* const>(&ep, 1),
                                            std::span<const double>(x, 1), sg);
        err = std::max(err, std::abs(out[0] - std::sin(x[0])));
      }
      return err;
    };
    const double e1 = level_error(32);
    const double e2 = level_error(64);
    CHECK(std::log2(e1 / e2) >= 2.5);
  }
}

TEST_SUITE_END();
