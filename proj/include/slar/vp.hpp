// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slar/advect.hpp"
#include "slar/field.hpp"

namespace slar {

// Stage coefficients of the third-order commutator-free exponential
// integrator: three frozen-field linear solves per step.
inline constexpr double kCf3Stage1Coef = 1.0 / 3.0;
inline constexpr double kCf3Stage2Coef = 2.0 / 3.0;
inline constexpr double kCf3Stage3VCoef = 2.0 / 3.0;
inline constexpr double kCf3Stage3EnCoef = -1.0 / 12.0;
inline constexpr double kCf3Stage3E2Coef = 3.0 / 4.0;

// One scaled field term entering a stage's acceleration.
struct StageFieldTerm {
  double coef = 0.0;
  const FieldSet* field = nullptr;
};

// Phase-space advection field for one stage: dx_j/dt = v_coef * v_j and
// dv_j/dt = -(sum of scaled E_j)(x). Field components are reconstructed
// off-grid with the quadratic stencil, from a dense table of the HT field
// when the spatial grid is small enough and entry-wise otherwise.
VelocityField vp_stage_field(const PhaseSpaceGrid& grid, double v_coef,
                             std::vector<StageFieldTerm> terms);

// P2 reconstruction of a dense column-major array at an off-grid point.
double dense_p2_eval(std::span<const double> values, const PhaseSpaceGrid& grid,
                     std::span<const double> x);

struct SlarStats {
  i64 accessor_evals = 0;
  i64 foot_clamps = 0;
  bool rank_saturated = false;
};

// Linear advance of the distribution from t0 to t1 with a frozen field:
// cross approximation applied to the local solver's accessor.
HTTensor slar_step(const HTTensor& f, const PhaseSpaceGrid& grid, double t0, double t1,
                   const VelocityField& field, const AcaParams& params,
                   SlarStats* stats = nullptr);

// Field solve for the current distribution: density contraction plus the
// spectral Poisson solve at tolerance 0.1 * params.eps_base.
FieldSet solve_field(const HTTensor& f, const PhaseSpaceGrid& grid, const AcaParams& params,
                     SlarStats* stats = nullptr);

// One nonlinear step from t to t + dt given the field of the current state.
HTTensor cf3_step(const HTTensor& f, const PhaseSpaceGrid& grid, const FieldSet& e_n, double t,
                  double dt, const AcaParams& params, SlarStats* stats = nullptr,
                  std::vector<std::vector<double>>* stage_coef_trace = nullptr);

// CFL-scaled step size from the current field.
double compute_dt(const FieldSet& e, const PhaseSpaceGrid& grid, double cfl);

struct DiagnosticsRecord {
  double time = 0.0;
  double dt = 0.0;
  double electric_energy = 0.0;
  double mass = 0.0;
  std::vector<double> momentum;  // per velocity mode
  double kinetic_energy = 0.0;
  double total_energy = 0.0;
  double compression_ratio = 0.0;
  std::vector<i64> ranks;
  i64 max_rank = 0;
  i64 max_interior_rank = 0;
  i64 accessor_evals = 0;
  double min_entry = 0.0;  // over a deterministic entry sample
};

DiagnosticsRecord diagnostics(const HTTensor& f, const FieldSet& e, const PhaseSpaceGrid& grid,
                              u64 sample_seed = 0);

// Velocity reversal via leaf-frame row reversal (symmetric velocity boxes).
HTTensor reflect_velocity(const HTTensor& f, const PhaseSpaceGrid& grid);

}  // namespace slar
