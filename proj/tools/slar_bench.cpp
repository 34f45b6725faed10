// SPDX-License-Identifier: Apache-2.0
// Benchmark harness: wall time of the adaptive step at fixed rank across
// grid sizes, the OpenMP kernels against the serial path, and the adaptive
// 1D1V driver against the dense full-grid reference.
#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "slar/bench.hpp"
#include "slar/parallel.hpp"

namespace {

using namespace slar;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// One free-streaming advance of the 4D Landau state at pinned ranks and
// correction counts, so the work per entry is resolution-independent.
double slar_step_seconds(i64 n, int reps) {
  RunConfig cfg;
  cfg.problem = "landau";
  cfg.dx = 2;
  cfg.dv = 2;
  cfg.alpha = 0.5;
  cfg.n = {n};
  cfg.eps_base = 1e-6;
  cfg.r_min = 1;
  cfg.r_max = 3;
  cfg.r_hash_min = 3;
  cfg.r_hash_max = 3;
  const PhaseSpaceGrid grid = cfg.grid();
  const HTTensor f = build_initial_condition(cfg);

  VelocityField streaming;
  const std::vector<int> smodes = grid.spatial_modes();
  const std::vector<int> vmodes = grid.velocity_modes();
  streaming.eval = [smodes, vmodes](std::span<const double> x, double, std::span<double> a) {
    for (size_t j = 0; j < smodes.size(); ++j) {
      a[static_cast<size_t>(smodes[j] - 1)] = x[static_cast<size_t>(vmodes[j] - 1)];
      a[static_cast<size_t>(vmodes[j] - 1)] = 0.0;
    }
  };

  const double dt = 0.5 * grid.mode(1).spacing() / grid.mode(2).hi;
  std::vector<double> times;
  for (int rep = 0; rep < reps; ++rep) {
    AcaParams params = cfg.aca_params();
    params.rng_seed = static_cast<u64>(rep);
    const auto t0 = Clock::now();
    slar_step(f, grid, 0.0, dt, streaming, params);
    times.push_back(seconds_since(t0));
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

void bench_scaling(int reps) {
  std::cout << "step time vs grid size (fixed rank, free streaming)\n";
  std::cout << "n,median_seconds,ratio_vs_previous\n";
  double prev = 0.0;
  for (i64 n : {32, 64, 128}) {
    const double s = slar_step_seconds(n, reps);
    std::cout << n << "," << s;
    if (prev > 0.0) std::cout << "," << s / prev;
    std::cout << "\n";
    prev = s;
  }
}

void bench_threads(int reps) {
  std::cout << "adaptive step: serial kernels vs OpenMP kernels\n";
  std::cout << "threads,median_seconds\n";
  const int saved = parallel_threads();
  for (int threads : {1, 2, 4}) {
    set_parallel_threads(threads);
    std::cout << threads << "," << slar_step_seconds(64, reps) << "\n";
  }
  set_parallel_threads(saved);
}

void bench_against_reference() {
  // Same 1D1V problem, adaptive vs dense full-grid reference.
  RunConfig cfg;
  cfg.problem = "landau";
  cfg.dx = 1;
  cfg.dv = 1;
  cfg.alpha = 0.01;
  cfg.n = {64};
  cfg.eps_base = 1e-7;
  cfg.t_final = 5.0;
  cfg.output_dir = "/tmp/slar_bench_run";
  const PhaseSpaceGrid grid = cfg.grid();

  auto t0 = Clock::now();
  RunResult adaptive = run_benchmark(cfg);
  const double adaptive_seconds = seconds_since(t0);

  ref::DenseField f0;
  f0.shape = grid.shape();
  {
    DenseTensor dense = ht_full(build_initial_condition(cfg));
    f0.values.resize(dense.values.size());
    for (size_t i = 0; i < dense.values.size(); ++i) f0.values[i] = dense.values[i].real();
  }
  t0 = Clock::now();
  ref::Vp1dResult reference = ref::run_vp_1d1v(grid, f0, cfg.t_final, cfg.cfl);
  const double reference_seconds = seconds_since(t0);

  double max_rel = 0.0;
  const size_t rows = std::min(adaptive.history.size(), reference.history.size());
  for (size_t i = 0; i < rows; ++i) {
    const double a = adaptive.history[i].electric_energy;
    const double b = reference.history[i].electric_energy;
    max_rel = std::max(max_rel, std::abs(a - b) / std::max(b, 1e-30));
  }
  std::cout << "1d1v weak landau, t=" << cfg.t_final << ", n=64\n";
  std::cout << "adaptive_seconds," << adaptive_seconds << "\n";
  std::cout << "dense_reference_seconds," << reference_seconds << "\n";
  std::cout << "max_relative_electric_energy_gap," << max_rel << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"timing comparisons for the adaptive solver"};
  int reps = 3;
  bool scaling = false, threads = false, reference = false;
  app.add_option("--reps", reps, "repetitions per measurement");
  app.add_flag("--scaling", scaling, "step time across grid sizes");
  app.add_flag("--threads", threads, "serial vs OpenMP kernels");
  app.add_flag("--reference", reference, "adaptive vs dense reference");
  CLI11_PARSE(app, argc, argv);
  if (!scaling && !threads && !reference) scaling = threads = reference = true;

  if (scaling) bench_scaling(reps);
  if (threads) bench_threads(reps);
  if (reference) bench_against_reference();
  return 0;
}
