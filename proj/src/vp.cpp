// SPDX-License-Identifier: Apache-2.0
#include "slar/vp.hpp"

#include <algorithm>

namespace slar {

namespace {

constexpr i64 kDenseFieldCap = 1 << 21;

struct DenseFieldTable {
  PhaseSpaceGrid spatial;
  std::vector<std::vector<double>> comp;  // per spatial component, column-major
};

}  // namespace

double dense_p2_eval(std::span<const double> values, const PhaseSpaceGrid& grid,
                     std::span<const double> x) {
  const int d = grid.dims();
  std::vector<double> pos(x.begin(), x.end());
  for (int m = 1; m <= d; ++m) {
    const GridMode& g = grid.mode(m);
    double& v = pos[static_cast<size_t>(m - 1)];
    if (g.boundary == BoundaryKind::kPeriodic)
      v = grid.wrap(m, v);
    else
      v = std::min(std::max(v, g.lo), g.hi);
  }
  const MultiIndex star = locate_cell(pos, grid);
  std::vector<i64> rows(static_cast<size_t>(3 * d));
  stencil_rows(grid, star, rows);

  const std::vector<i64> shape = grid.shape();
  std::vector<i64> strides(static_cast<size_t>(d));
  i64 stride = 1;
  for (int m = 0; m < d; ++m) {
    strides[static_cast<size_t>(m)] = stride;
    stride *= shape[static_cast<size_t>(m)];
  }
  i64 base = 0;
  for (int m = 0; m < d; ++m)
    base += (star[static_cast<size_t>(m)] - 1) * strides[static_cast<size_t>(m)];

  auto read = [&](int mu, int delta_mu, int nu, int delta_nu) -> double {
    i64 lin = base;
    for (int part = 0; part < 2; ++part) {
      const int mode = part == 0 ? mu : nu;
      const int delta = part == 0 ? delta_mu : delta_nu;
      if (mode == 0 || delta == 0) continue;
      const i64 row = rows[static_cast<size_t>(3 * (mode - 1) + (delta + 1))];
      if (row == 0) return 0.0;
      lin += (row - star[static_cast<size_t>(mode - 1)]) * strides[static_cast<size_t>(mode - 1)];
    }
    return values[static_cast<size_t>(lin)];
  };

  std::vector<double> stencil(static_cast<size_t>(p2_stencil_size(d)));
  stencil[0] = read(0, 0, 0, 0);
  for (int mu = 1; mu <= d; ++mu) {
    stencil[static_cast<size_t>(1 + 2 * (mu - 1))] = read(mu, +1, 0, 0);
    stencil[static_cast<size_t>(2 + 2 * (mu - 1))] = read(mu, -1, 0, 0);
  }
  const i64 pair_base = 1 + 2 * d;
  for (int mu = 1; mu <= d; ++mu) {
    for (int nu = mu + 1; nu <= d; ++nu) {
      const i64 b = pair_base + 4 * p2_pair_index(mu, nu, d);
      stencil[static_cast<size_t>(b + 0)] = read(mu, +1, nu, +1);
      stencil[static_cast<size_t>(b + 1)] = read(mu, -1, nu, -1);
      stencil[static_cast<size_t>(b + 2)] = read(mu, +1, nu, -1);
      stencil[static_cast<size_t>(b + 3)] = read(mu, -1, nu, +1);
    }
  }
  const P2Coefficients<double> coeffs = p2_coefficients<double>(stencil, d);
  std::vector<double> xi(static_cast<size_t>(d));
  for (int m = 1; m <= d; ++m)
    xi[static_cast<size_t>(m - 1)] =
        (pos[static_cast<size_t>(m - 1)] - grid.mode(m).center(star[static_cast<size_t>(m - 1)])) /
        grid.mode(m).spacing();
  return p2_evaluate(coeffs, xi);
}

VelocityField vp_stage_field(const PhaseSpaceGrid& grid, double v_coef,
                             std::vector<StageFieldTerm> terms) {
  const std::vector<int> smodes = grid.spatial_modes();
  const std::vector<int> vmodes = grid.velocity_modes();
  require(smodes.size() == vmodes.size(), "vp_stage_field: one velocity mode per spatial mode");
  const int dx = static_cast<int>(smodes.size());
  const PhaseSpaceGrid spatial = grid.spatial_restriction();

  i64 spatial_points = 1;
  for (const GridMode& m : spatial.modes) spatial_points *= m.count;

  auto table = std::make_shared<DenseFieldTable>();
  table->spatial = spatial;
  bool dense_ok = spatial_points <= kDenseFieldCap;
  if (dense_ok) {
    table->comp.resize(static_cast<size_t>(dx));
    for (int j = 0; j < dx; ++j) {
      std::vector<double> combined(static_cast<size_t>(spatial_points), 0.0);
      for (const StageFieldTerm& term : terms) {
        const DenseTensor dense = ht_full(term.field->e[static_cast<size_t>(j)], kDenseFieldCap);
        for (i64 i = 0; i < spatial_points; ++i)
          combined[static_cast<size_t>(i)] += term.coef * dense.values[static_cast<size_t>(i)].real();
      }
      table->comp[static_cast<size_t>(j)] = std::move(combined);
    }
  }

  // HT fallback keeps the field sets alive through shared copies.
  auto ht_terms = std::make_shared<std::vector<std::pair<double, std::vector<HTTensor>>>>();
  if (!dense_ok) {
    for (const StageFieldTerm& term : terms) ht_terms->emplace_back(term.coef, term.field->e);
  }

  VelocityField field;
  field.eval = [grid, spatial, smodes, vmodes, dx, v_coef, table, dense_ok, ht_terms](
                   std::span<const double> x, double, std::span<double> a) {
    std::vector<double> xs(static_cast<size_t>(dx));
    for (int j = 0; j < dx; ++j) xs[static_cast<size_t>(j)] = x[static_cast<size_t>(smodes[static_cast<size_t>(j)] - 1)];
    for (int j = 0; j < dx; ++j) {
      // dx_j/dt: scaled velocity coordinate of the paired mode.
      a[static_cast<size_t>(smodes[static_cast<size_t>(j)] - 1)] =
          v_coef * x[static_cast<size_t>(vmodes[static_cast<size_t>(j)] - 1)];
      // dv_j/dt = -E_j(x).
      double e = 0.0;
      if (dense_ok) {
        e = dense_p2_eval(table->comp[static_cast<size_t>(j)], table->spatial, xs);
      } else {
        for (const auto& [coef, comps] : *ht_terms) {
          const HTTensor* cp = &comps[static_cast<size_t>(j)];
          e += coef * eval_field_offgrid(std::span<const HTTensor* const>(&cp, 1), xs, spatial)[0];
        }
      }
      a[static_cast<size_t>(vmodes[static_cast<size_t>(j)] - 1)] = -e;
    }
  };
  return field;
}

HTTensor slar_step(const HTTensor& f, const PhaseSpaceGrid& grid, double t0, double t1,
                   const VelocityField& field, const AcaParams& params, SlarStats* stats) {
  auto fp = std::make_shared<const HTTensor>(f);
  auto clamp = std::make_shared<std::atomic<i64>>(0);
  EntryAccessor acc = sl_accessor(fp, grid, t0, t1, field, clamp);
  AcaStats aca_stats;
  HTTensor out = htaca(acc, f.tree_ptr(), params, &aca_stats);
  if (stats != nullptr) {
    stats->accessor_evals += aca_stats.accessor_evals.load();
    stats->foot_clamps += clamp->load();
    stats->rank_saturated = stats->rank_saturated || aca_stats.rank_saturated;
  }
  return out;
}

FieldSet solve_field(const HTTensor& f, const PhaseSpaceGrid& grid, const AcaParams& params,
                     SlarStats* stats) {
  FieldSet out;
  HTTensor rho = compute_density(f, grid, &out.rho0);
  AcaStats aca_stats;
  AcaParams poisson_params = params;
  poisson_params.rng_seed = CounterRng::combine(params.rng_seed, 0x706f6973ull);
  FieldSet solved = solve_poisson(rho, grid.spatial_restriction(), 0.1 * params.eps_base,
                                  poisson_params, &aca_stats);
  solved.rho0 = out.rho0;
  if (stats != nullptr) stats->rank_saturated = stats->rank_saturated || aca_stats.rank_saturated;
  return solved;
}

HTTensor cf3_step(const HTTensor& f, const PhaseSpaceGrid& grid, const FieldSet& e_n, double t,
                  double dt, const AcaParams& params, SlarStats* stats,
                  std::vector<std::vector<double>>* stage_coef_trace) {
  require(dt > 0.0, "cf3_step: dt must be positive");
  const double t1 = t + dt;
  auto stage_params = [&](u64 tag) {
    AcaParams p = params;
    p.rng_seed = CounterRng::combine(params.rng_seed, tag);
    return p;
  };
  if (stage_coef_trace != nullptr)
    *stage_coef_trace = {{kCf3Stage1Coef}, {kCf3Stage2Coef}, {kCf3Stage3EnCoef, kCf3Stage3E2Coef}};

  const HTTensor f1 =
      slar_step(f, grid, t, t1, vp_stage_field(grid, kCf3Stage1Coef, {{kCf3Stage1Coef, &e_n}}),
                stage_params(1), stats);
  const FieldSet e1 = solve_field(f1, grid, stage_params(11), stats);

  const HTTensor f2 =
      slar_step(f, grid, t, t1, vp_stage_field(grid, kCf3Stage2Coef, {{kCf3Stage2Coef, &e1}}),
                stage_params(2), stats);
  const FieldSet e2 = solve_field(f2, grid, stage_params(12), stats);

  return slar_step(
      f1, grid, t, t1,
      vp_stage_field(grid, kCf3Stage3VCoef, {{kCf3Stage3EnCoef, &e_n}, {kCf3Stage3E2Coef, &e2}}),
      stage_params(3), stats);
}

double compute_dt(const FieldSet& e, const PhaseSpaceGrid& grid, double cfl) {
  const std::vector<int> smodes = grid.spatial_modes();
  const std::vector<int> vmodes = grid.velocity_modes();
  i64 spatial_points = 1;
  for (int m : smodes) spatial_points *= grid.mode(m).count;

  double denom = 0.0;
  for (size_t j = 0; j < smodes.size(); ++j) {
    const double vmax = grid.mode(vmodes[j]).hi;
    denom += vmax / grid.mode(smodes[j]).spacing();
  }
  for (size_t j = 0; j < vmodes.size(); ++j) {
    const double ebar =
        ht_norm(e.e[j]) / std::sqrt(static_cast<double>(spatial_points));
    denom += ebar / grid.mode(vmodes[j]).spacing();
  }
  const double dt = cfl / denom;
  return std::max(dt, 1e-6);
}

namespace {

double real_full_contraction(const HTTensor& f, const PhaseSpaceGrid& grid,
                             const std::vector<VecX>& weights) {
  HTTensor t = f;
  for (int m = 1; m <= grid.dims(); ++m) {
    const VecX& w = weights[static_cast<size_t>(m - 1)];
    t = contract_mode(t, m, std::span<const cplx>(w.data(), static_cast<size_t>(w.size())));
  }
  const MultiIndex ones(static_cast<size_t>(grid.dims()), 1);
  return ht_entry(t, ones).real();
}

}  // namespace

DiagnosticsRecord diagnostics(const HTTensor& f, const FieldSet& e, const PhaseSpaceGrid& grid,
                              u64 sample_seed) {
  DiagnosticsRecord rec;
  const int d = grid.dims();
  const std::vector<int> vmodes = grid.velocity_modes();
  const std::vector<int> smodes = grid.spatial_modes();

  std::vector<VecX> uniform(static_cast<size_t>(d));
  for (int m = 1; m <= d; ++m)
    uniform[static_cast<size_t>(m - 1)] =
        VecX::Constant(grid.mode(m).count, cplx(grid.mode(m).spacing(), 0.0));

  rec.mass = real_full_contraction(f, grid, uniform);

  rec.momentum.resize(vmodes.size());
  for (size_t j = 0; j < vmodes.size(); ++j) {
    std::vector<VecX> w = uniform;
    const int m = vmodes[j];
    const GridMode& g = grid.mode(m);
    VecX vw(g.count);
    for (i64 i = 1; i <= g.count; ++i) vw(i - 1) = g.center(i) * g.spacing();
    w[static_cast<size_t>(m - 1)] = vw;
    rec.momentum[j] = real_full_contraction(f, grid, w);
  }

  rec.kinetic_energy = 0.0;
  for (size_t j = 0; j < vmodes.size(); ++j) {
    std::vector<VecX> w = uniform;
    const int m = vmodes[j];
    const GridMode& g = grid.mode(m);
    VecX vw(g.count);
    for (i64 i = 1; i <= g.count; ++i)
      vw(i - 1) = 0.5 * g.center(i) * g.center(i) * g.spacing();
    w[static_cast<size_t>(m - 1)] = vw;
    rec.kinetic_energy += real_full_contraction(f, grid, w);
  }

  double dxprod = 1.0;
  for (int m : smodes) dxprod *= grid.mode(m).spacing();
  rec.electric_energy = 0.0;
  for (const HTTensor& comp : e.e) {
    const double n = ht_norm(comp);
    rec.electric_energy += 0.5 * n * n * dxprod;
  }
  rec.total_energy = rec.kinetic_energy + rec.electric_energy;

  i64 total = 1;
  for (i64 n : f.shape()) total *= n;
  rec.compression_ratio = static_cast<double>(f.storage_count()) / static_cast<double>(total);
  rec.ranks = f.ranks();
  rec.max_rank = f.max_rank();
  rec.max_interior_rank = f.max_interior_rank();

  // Negativity monitor over a deterministic sample of entries.
  CounterRng rng{CounterRng::mix(sample_seed ^ 0x6d696e65ull), 0};
  EntryWorkspace ws;
  double min_entry = std::numeric_limits<double>::infinity();
  MultiIndex idx(static_cast<size_t>(d));
  for (int trial = 0; trial < 4096; ++trial) {
    for (int m = 1; m <= d; ++m)
      idx[static_cast<size_t>(m - 1)] =
          1 + static_cast<i64>(rng.below(static_cast<u64>(grid.mode(m).count)));
    min_entry = std::min(min_entry, ht_entry(f, idx, ws).real());
  }
  rec.min_entry = min_entry;
  return rec;
}

HTTensor reflect_velocity(const HTTensor& f, const PhaseSpaceGrid& grid) {
  const DimensionTree& tree = f.tree();
  std::vector<MatX> frames(static_cast<size_t>(tree.num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(tree.num_nodes()));
  for (int id = 0; id < tree.num_nodes(); ++id) {
    if (tree.node(id).leaf())
      frames[static_cast<size_t>(id)] = f.frame(id);
    else
      transfers[static_cast<size_t>(id)] = f.transfer(id);
  }
  for (int m : grid.velocity_modes()) {
    const int id = tree.leaf_of_mode(m);
    frames[static_cast<size_t>(id)] = frames[static_cast<size_t>(id)].colwise().reverse().eval();
  }
  return HTTensor(f.tree_ptr(), f.shape(), std::move(frames), std::move(transfers));
}

}  // namespace slar
