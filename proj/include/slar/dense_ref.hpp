// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slar/advect.hpp"

namespace slar::ref {

// Dense full-grid counterpart of the adaptive solver: the same local scheme
// (third-order tracing plus quadratic reconstruction) applied at every grid
// point with no compression. Serial; kept as the reference for testing and
// benchmark comparison.
struct DenseField {
  std::vector<i64> shape;
  std::vector<double> values;  // column-major, mode 1 fastest

  double at(std::span<const i64> idx) const;
};

DenseField sample_grid(const PhaseSpaceGrid& grid,
                       const std::function<double(std::span<const double>)>& fn);

// One advection step on the full grid.
DenseField advect_step(const DenseField& f, const PhaseSpaceGrid& grid, double t0, double t1,
                       const VelocityField& field);

double l2_norm(const DenseField& f, const PhaseSpaceGrid& grid);
double l2_diff(const DenseField& a, const DenseField& b, const PhaseSpaceGrid& grid);

struct VpHistoryRow {
  i64 step = 0;
  double time = 0.0;
  double dt = 0.0;
  double electric_energy = 0.0;
  double mass = 0.0;
};

struct Vp1dResult {
  std::vector<VpHistoryRow> history;
  DenseField f;
};

// Full-grid 1D1V Vlasov-Poisson reference with the same stage sequence, time
// step rule, and field solve as the adaptive driver.
Vp1dResult run_vp_1d1v(const PhaseSpaceGrid& grid, const DenseField& f0, double t_final,
                       double cfl);

}  // namespace slar::ref
