// SPDX-License-Identifier: Apache-2.0
#include "slar/advect.hpp"

#include <algorithm>
#include <map>

namespace slar {

std::vector<double> spectral_wavenumbers(double length, i64 count) {
  std::vector<double> k(static_cast<size_t>(count));
  const double base = 2.0 * M_PI / length;
  for (i64 i = 0; i < count; ++i) {
    const i64 m = 2 * i < count ? i : i - count;
    k[static_cast<size_t>(i)] = base * static_cast<double>(m);
  }
  return k;
}

std::vector<double> trace_rk3(std::span<const double> x, double t_start, double t_end,
                              const VelocityField& field, const PhaseSpaceGrid& grid,
                              std::atomic<i64>* clamp_count) {
  const int d = grid.dims();
  require(static_cast<int>(x.size()) == d, "trace_rk3: point arity mismatch");
  const double dt = t_end - t_start;
  std::vector<double> k1(static_cast<size_t>(d)), k2(static_cast<size_t>(d)),
      k3(static_cast<size_t>(d)), tmp(static_cast<size_t>(d)), foot(static_cast<size_t>(d));

  field.eval(x, t_start, k1);
  for (int m = 0; m < d; ++m)
    tmp[static_cast<size_t>(m)] = x[static_cast<size_t>(m)] + 0.5 * dt * k1[static_cast<size_t>(m)];
  field.eval(tmp, t_start + 0.5 * dt, k2);
  for (int m = 0; m < d; ++m)
    tmp[static_cast<size_t>(m)] =
        x[static_cast<size_t>(m)] + dt * (2.0 * k2[static_cast<size_t>(m)] - k1[static_cast<size_t>(m)]);
  field.eval(tmp, t_start + dt, k3);
  for (int m = 0; m < d; ++m)
    foot[static_cast<size_t>(m)] =
        x[static_cast<size_t>(m)] +
        dt / 6.0 *
            (k1[static_cast<size_t>(m)] + 4.0 * k2[static_cast<size_t>(m)] + k3[static_cast<size_t>(m)]);

  for (int m = 1; m <= d; ++m) {
    const GridMode& g = grid.mode(m);
    double& v = foot[static_cast<size_t>(m - 1)];
    if (g.boundary == BoundaryKind::kPeriodic) {
      v = grid.wrap(m, v);
    } else if (v < g.lo || v > g.hi) {
      v = v < g.lo ? g.lo : g.hi;
      if (clamp_count != nullptr) clamp_count->fetch_add(1, std::memory_order_relaxed);
    }
  }
  return foot;
}

MultiIndex locate_cell(std::span<const double> foot, const PhaseSpaceGrid& grid) {
  MultiIndex idx(static_cast<size_t>(grid.dims()));
  for (int m = 1; m <= grid.dims(); ++m)
    idx[static_cast<size_t>(m - 1)] = grid.locate(m, foot[static_cast<size_t>(m - 1)]);
  return idx;
}

void stencil_rows(const PhaseSpaceGrid& grid, std::span<const i64> center, std::span<i64> rows) {
  for (int m = 1; m <= grid.dims(); ++m) {
    const GridMode& g = grid.mode(m);
    for (int k = 0; k < 3; ++k) {
      const i64 j = center[static_cast<size_t>(m - 1)] + (k - 1);
      i64 row;
      if (j >= 1 && j <= g.count) {
        row = j;
      } else if (g.boundary == BoundaryKind::kPeriodic) {
        row = (j - 1 + g.count) % g.count + 1;
      } else {
        row = 0;  // outside the box: read as zero
      }
      rows[static_cast<size_t>(3 * (m - 1) + k)] = row;
    }
  }
}

HtStencilEvaluator::HtStencilEvaluator(std::shared_ptr<const HTTensor> t) : t_(std::move(t)) {
  const DimensionTree& tree = t_->tree();
  order_ = tree.bottom_up();
  plans_.resize(static_cast<size_t>(tree.num_nodes()));
  work_.resize(static_cast<size_t>(tree.num_nodes()));

  // Canonical signature list per node: base, singles, then pair corners in
  // (mu, nu) order; the root's list equals the output stencil layout.
  std::vector<std::map<std::array<int, 4>, int>> lookup(static_cast<size_t>(tree.num_nodes()));
  for (int id : order_) {
    const auto& node = tree.node(id);
    NodePlan& plan = plans_[static_cast<size_t>(id)];
    auto add = [&](std::array<int, 4> sig) {
      lookup[static_cast<size_t>(id)].emplace(sig, static_cast<int>(plan.sigs.size()));
      plan.sigs.push_back(sig);
    };
    add({0, 0, 0, 0});
    for (int mu : node.modes) {
      add({mu, +1, 0, 0});
      add({mu, -1, 0, 0});
    }
    for (size_t a = 0; a < node.modes.size(); ++a) {
      for (size_t b = a + 1; b < node.modes.size(); ++b) {
        const int mu = node.modes[a];
        const int nu = node.modes[b];
        add({mu, +1, nu, +1});
        add({mu, -1, nu, -1});
        add({mu, +1, nu, -1});
        add({mu, -1, nu, +1});
      }
    }
    work_[static_cast<size_t>(id)].resize(plan.sigs.size());
    if (node.leaf()) continue;

    const auto& lmodes = tree.node(node.left).modes;
    const auto& rmodes = tree.node(node.right).modes;
    auto restrict_to = [](const std::array<int, 4>& sig, const std::vector<int>& modes) {
      std::array<int, 4> r{0, 0, 0, 0};
      int slot = 0;
      for (int part = 0; part < 2; ++part) {
        const int mode = sig[static_cast<size_t>(2 * part)];
        const int delta = sig[static_cast<size_t>(2 * part + 1)];
        if (mode == 0) continue;
        if (std::find(modes.begin(), modes.end(), mode) != modes.end()) {
          r[static_cast<size_t>(2 * slot)] = mode;
          r[static_cast<size_t>(2 * slot + 1)] = delta;
          ++slot;
        }
      }
      return r;
    };
    plan.child_slots.reserve(plan.sigs.size());
    for (const auto& sig : plan.sigs) {
      plan.child_slots.emplace_back(lookup[static_cast<size_t>(node.left)].at(restrict_to(sig, lmodes)),
                                    lookup[static_cast<size_t>(node.right)].at(restrict_to(sig, rmodes)));
    }
  }
}

void HtStencilEvaluator::evaluate(std::span<const i64> rows, std::span<cplx> out) {
  const DimensionTree& tree = t_->tree();
  for (int id : order_) {
    const auto& node = tree.node(id);
    const NodePlan& plan = plans_[static_cast<size_t>(id)];
    auto& work = work_[static_cast<size_t>(id)];
    if (node.leaf()) {
      const int mu = node.modes[0];
      const MatX& u = t_->frame(id);
      for (size_t s = 0; s < plan.sigs.size(); ++s) {
        const int delta = plan.sigs[s][0] == 0 ? 0 : plan.sigs[s][1];
        const i64 row = rows[static_cast<size_t>(3 * (mu - 1) + (delta + 1))];
        if (row == 0) {
          work[s] = VecX::Zero(u.cols());
        } else {
          work[s] = u.row(row - 1).transpose();
        }
      }
      continue;
    }
    const MatX& b = t_->transfer(id);
    const auto& wl = work_[static_cast<size_t>(node.left)];
    const auto& wr = work_[static_cast<size_t>(node.right)];
    const i64 rl = t_->rank(node.left);
    const i64 rr = t_->rank(node.right);
    const i64 ra = b.cols();
    for (size_t s = 0; s < plan.sigs.size(); ++s) {
      const VecX& vl = wl[static_cast<size_t>(plan.child_slots[s].first)];
      const VecX& vr = wr[static_cast<size_t>(plan.child_slots[s].second)];
      VecX& v = work[s];
      v.resize(ra);
      for (i64 c = 0; c < ra; ++c) {
        const cplx* bc = b.col(c).data();
        cplx acc(0.0, 0.0);
        i64 j = 0;
        for (i64 q = 0; q < rr; ++q) {
          const cplx vq = vr(q);
          for (i64 p = 0; p < rl; ++p) acc += bc[j++] * (vl(p) * vq);
        }
        v(c) = acc;
      }
    }
  }
  const auto& root_work = work_[static_cast<size_t>(tree.root())];
  require(out.size() == root_work.size(), "stencil evaluate: output size mismatch");
  for (size_t s = 0; s < root_work.size(); ++s) out[s] = root_work[s](0);
}

namespace {

// Thread-local evaluator cache keyed by a per-accessor instance id, so
// concurrent evaluations never share scratch space.
HtStencilEvaluator& thread_evaluator(u64 instance, const std::shared_ptr<const HTTensor>& t) {
  thread_local std::map<u64, std::unique_ptr<HtStencilEvaluator>> cache;
  auto it = cache.find(instance);
  if (it == cache.end()) {
    if (cache.size() > 8) cache.clear();
    it = cache.emplace(instance, std::make_unique<HtStencilEvaluator>(t)).first;
  }
  return *it->second;
}

std::atomic<u64> g_accessor_instance{1};

}  // namespace

EntryAccessor sl_accessor(std::shared_ptr<const HTTensor> f_prev, const PhaseSpaceGrid& grid,
                          double t_n, double t_np1, VelocityField field,
                          std::shared_ptr<std::atomic<i64>> clamp_count) {
  require(f_prev->shape() == grid.shape(), "sl_accessor: tensor shape must match the grid");
  const int d = grid.dims();
  const u64 instance = g_accessor_instance.fetch_add(1);
  EntryAccessor acc;
  acc.shape = grid.shape();
  acc.eval = [f_prev = std::move(f_prev), grid, t_n, t_np1, field = std::move(field), clamp_count,
              instance, d](std::span<const i64> idx) {
    std::vector<double> x(static_cast<size_t>(d));
    for (int m = 1; m <= d; ++m)
      x[static_cast<size_t>(m - 1)] = grid.mode(m).center(idx[static_cast<size_t>(m - 1)]);
    const std::vector<double> foot = trace_rk3(x, t_np1, t_n, field, grid, clamp_count.get());
    const MultiIndex star = locate_cell(foot, grid);

    std::vector<i64> rows(static_cast<size_t>(3 * d));
    stencil_rows(grid, star, rows);
    HtStencilEvaluator& eval = thread_evaluator(instance, f_prev);
    std::vector<cplx> stencil(static_cast<size_t>(p2_stencil_size(d)));
    eval.evaluate(rows, stencil);

    const P2Coefficients<cplx> coeffs = p2_coefficients<cplx>(stencil, d);
    std::vector<double> xi(static_cast<size_t>(d));
    for (int m = 1; m <= d; ++m)
      xi[static_cast<size_t>(m - 1)] =
          (foot[static_cast<size_t>(m - 1)] - grid.mode(m).center(star[static_cast<size_t>(m - 1)])) /
          grid.mode(m).spacing();
    return p2_evaluate(coeffs, xi);
  };
  return acc;
}

std::vector<double> eval_field_offgrid(std::span<const HTTensor* const> components,
                                       std::span<const double> x, const PhaseSpaceGrid& spatial) {
  const int d = spatial.dims();
  require(static_cast<int>(x.size()) == d, "eval_field_offgrid: point arity mismatch");
  std::vector<double> pos(x.begin(), x.end());
  for (int m = 1; m <= d; ++m) {
    const GridMode& g = spatial.mode(m);
    double& v = pos[static_cast<size_t>(m - 1)];
    if (g.boundary == BoundaryKind::kPeriodic)
      v = spatial.wrap(m, v);
    else
      v = std::min(std::max(v, g.lo), g.hi);
  }
  const MultiIndex star = locate_cell(pos, spatial);
  std::vector<i64> rows(static_cast<size_t>(3 * d));
  stencil_rows(spatial, star, rows);

  std::vector<double> xi(static_cast<size_t>(d));
  for (int m = 1; m <= d; ++m)
    xi[static_cast<size_t>(m - 1)] =
        (pos[static_cast<size_t>(m - 1)] - spatial.mode(m).center(star[static_cast<size_t>(m - 1)])) /
        spatial.mode(m).spacing();

  std::vector<double> out(components.size());
  std::vector<cplx> stencil(static_cast<size_t>(p2_stencil_size(d)));
  std::vector<double> real_stencil(stencil.size());
  for (size_t c = 0; c < components.size(); ++c) {
    HtStencilEvaluator eval(std::shared_ptr<const HTTensor>(components[c], [](const HTTensor*) {}));
    eval.evaluate(rows, stencil);
    for (size_t s = 0; s < stencil.size(); ++s) real_stencil[s] = stencil[s].real();
    const P2Coefficients<double> coeffs = p2_coefficients<double>(real_stencil, d);
    out[c] = p2_evaluate(coeffs, xi);
  }
  return out;
}

}  // namespace slar
