// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

#include <json.hpp>

#include "slar/dense_ref.hpp"
#include "slar/vp.hpp"

namespace slar {

// Benchmark configuration. Defaults follow the standard test settings:
// CFL 5, gamma 0.1, v_max 2*pi for Landau problems and 8 for the
// two-stream instability.
struct RunConfig {
  std::string problem = "landau";  // "landau" | "two-stream"
  int dx = 1;
  int dv = 1;
  double alpha = 0.01;
  double k = 0.5;
  double v0 = 2.4;     // two-stream drift speed
  double v_max = 0.0;  // 0: problem default
  std::vector<i64> n;  // per-mode counts; a single entry is broadcast
  double cfl = 5.0;
  double eps_base = 1e-4;
  double gamma = 0.1;
  i64 r_min = 1;
  i64 r_max = 0;          // 0: unbounded
  i64 min_leaf_rank = 0;  // leaf-rank floor applied in every truncation
  i64 r_hash_min = 1;
  i64 r_hash_max = 0;  // 0: automatic
  std::string tree_strategy;        // "balanced" | "paired-unbalanced" | "" (auto)
  std::vector<std::string> mode_order;  // labels like "x1", "v1"; empty: paired
  double t_final = 10.0;
  std::string output_dir = "slar_out";
  u64 seed = 0;
  i64 checkpoint_interval = 0;  // steps between checkpoints; 0: final only

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load_file(const std::string& path);
  nlohmann::json to_json() const;

  int dims() const { return dx + dv; }
  std::vector<std::string> ordering() const;  // resolved mode labels
  PhaseSpaceGrid grid() const;
  TreePtr tree() const;
  AcaParams aca_params() const;
  void validate() const;
};

// Exact-rank construction of the initial distribution from leaf frames and
// transfer tensors; no cross approximation involved.
HTTensor build_initial_condition(const RunConfig& cfg);

struct RunResult {
  int exit_code = 0;
  i64 steps = 0;
  std::string csv_path;
  std::string final_checkpoint;
  std::vector<DiagnosticsRecord> history;
};

// Time loop with CSV diagnostics and periodic checkpointing. When resuming,
// rows are appended starting at the checkpoint's step + 1 and reproduce the
// uninterrupted run bit-identically for the same seed.
RunResult run_benchmark(const RunConfig& cfg, const std::string& resume_checkpoint = "");

std::string csv_header(int dv);
std::string csv_row(i64 step, const DiagnosticsRecord& rec);

struct SliceResult {
  int mode_a = 0;
  int mode_b = 0;
  std::vector<double> coord_a;  // centers of the first free mode
  std::vector<double> coord_b;
  std::vector<double> values;  // column-major, mode_a fastest
  MultiIndex snapped;          // the fixed indices actually used
};

// Two-dimensional slice at fixed values for the other modes; fixed values
// snap to the nearest center, midpoints snapping low.
SliceResult extract_slice(const HTTensor& f, const PhaseSpaceGrid& grid, int mode_a, int mode_b,
                          const std::vector<double>& fixed);
void write_slice_csv(std::ostream& out, const SliceResult& slice);

// Reversibility experiment: advance to t_final, reverse velocities, advance
// the same span again, reverse back, and measure the L2 distance from the
// initial state.
double reversibility_error(const RunConfig& cfg);

struct ConvergenceLevel {
  double x = 0.0;  // grid count or CFL
  double error = 0.0;
};
struct ConvergenceResult {
  std::vector<ConvergenceLevel> levels;
  double fitted_order = 0.0;
};

ConvergenceResult spatial_convergence_study(const RunConfig& base, const std::vector<i64>& ns,
                                            const std::vector<double>& tolerances);
ConvergenceResult temporal_convergence_study(const RunConfig& base, i64 n, double tolerance,
                                             const std::vector<double>& cfls);
// Linear rotation with a known exact solution, on the dense reference path.
ConvergenceResult rotation_convergence_study(const std::vector<i64>& ns);

double fit_order(const std::vector<ConvergenceLevel>& levels, bool error_grows_with_x);

}  // namespace slar
