// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "slar/bench.hpp"
#include "slar/ht_io.hpp"

namespace {

using namespace slar;

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::atof(item.c_str()));
  return out;
}

int cmd_run(const std::string& config_path, const std::string& output,
            const std::string& resume) {
  RunConfig cfg = RunConfig::load_file(config_path);
  if (!output.empty()) cfg.output_dir = output;
  RunResult res = run_benchmark(cfg, resume);
  if (res.exit_code == 0) {
    std::cout << "completed " << res.steps << " steps; diagnostics: " << res.csv_path << "\n";
    if (!res.final_checkpoint.empty())
      std::cout << "final checkpoint: " << res.final_checkpoint << "\n";
  }
  return res.exit_code;
}

void print_study(const std::string& title, const ConvergenceResult& res, const char* x_name) {
  std::cout << title << "\n";
  std::cout << x_name << ",error\n";
  for (const auto& lvl : res.levels) std::cout << lvl.x << "," << lvl.error << "\n";
  std::cout << "fitted order: " << res.fitted_order << "\n";
}

int cmd_converge(const std::string& config_path, int levels, const std::string& mode) {
  RunConfig cfg = RunConfig::load_file(config_path);
  if (mode == "spatial") {
    std::vector<i64> ns;
    std::vector<double> tols;
    const i64 n_fine = cfg.n.back();
    for (int lvl = levels - 1; lvl >= 0; --lvl) {
      ns.push_back(n_fine >> lvl);
      tols.push_back(cfg.eps_base * std::pow(10.0, lvl));
    }
    print_study("spatial reversibility study", spatial_convergence_study(cfg, ns, tols), "n");
  } else if (mode == "temporal") {
    std::vector<double> cfls;
    for (int lvl = 0; lvl < levels; ++lvl) cfls.push_back(2.0 * std::pow(2.0, lvl));
    print_study("temporal reversibility study",
                temporal_convergence_study(cfg, cfg.n.back(), cfg.eps_base, cfls), "cfl");
  } else if (mode == "rotation") {
    std::vector<i64> ns;
    for (int lvl = 0; lvl < levels; ++lvl) ns.push_back(32 << lvl);
    print_study("rotation one-step study", rotation_convergence_study(ns), "n");
  } else {
    std::cerr << "unknown study mode: " << mode << "\n";
    return 2;
  }
  return 0;
}

int cmd_slice(const std::string& checkpoint, const std::string& modes_arg,
              const std::string& fixed_arg, const std::string& output) {
  LoadedHt loaded = load_ht_file(checkpoint);
  require(loaded.meta.contains("config"), "slice: checkpoint carries no configuration");
  RunConfig cfg = RunConfig::from_json(loaded.meta.at("config"));
  const PhaseSpaceGrid grid = cfg.grid();

  const std::vector<double> modes = parse_doubles(modes_arg);
  require(modes.size() == 2, "slice: --modes expects two mode numbers");
  const std::vector<double> fixed = parse_doubles(fixed_arg);

  SliceResult slice = extract_slice(loaded.tensor, grid, static_cast<int>(modes[0]),
                                    static_cast<int>(modes[1]), fixed);
  std::ofstream out(output);
  if (!out) {
    std::cerr << "cannot open " << output << "\n";
    return 1;
  }
  write_slice_csv(out, slice);
  std::cout << "slice written to " << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive-rank kinetic benchmark runner"};
  app.require_subcommand(1);

  std::string config_path, output, resume;
  auto* run = app.add_subcommand("run", "run a configured benchmark");
  run->add_option("--config", config_path, "JSON configuration path")->required();
  run->add_option("--output", output, "output directory override");
  run->add_option("--resume", resume, "checkpoint to resume from");

  std::string conv_config, conv_mode = "spatial";
  int conv_levels = 3;
  auto* converge = app.add_subcommand("converge", "reversibility convergence study");
  converge->add_option("--config", conv_config, "JSON configuration path")->required();
  converge->add_option("--levels", conv_levels, "number of refinement levels");
  converge->add_option("--mode", conv_mode, "spatial | temporal | rotation");

  std::string slice_ckpt, slice_modes, slice_fixed, slice_out = "slice.csv";
  auto* slice = app.add_subcommand("slice", "extract a 2D slice from a checkpoint");
  slice->add_option("--checkpoint", slice_ckpt, "checkpoint file")->required();
  slice->add_option("--modes", slice_modes, "two free mode numbers, e.g. 1,2")->required();
  slice->add_option("--fixed", slice_fixed, "values for the remaining modes");
  slice->add_option("--output", slice_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return cmd_run(config_path, output, resume);
    if (converge->parsed()) return cmd_converge(conv_config, conv_levels, conv_mode);
    if (slice->parsed()) return cmd_slice(slice_ckpt, slice_modes, slice_fixed, slice_out);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
