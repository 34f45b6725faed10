// SPDX-License-Identifier: Apache-2.0
#include "slar/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "slar/ht_io.hpp"

namespace slar {

namespace {

struct ModeLabel {
  bool spatial = false;
  int component = 0;  // 1-based within its group
};

ModeLabel parse_label(const std::string& label) {
  require(label.size() >= 2 && (label[0] == 'x' || label[0] == 'v'),
          "mode ordering: labels must look like x1 or v2");
  ModeLabel out;
  out.spatial = label[0] == 'x';
  out.component = std::atoi(label.c_str() + 1);
  require(out.component >= 1, "mode ordering: bad component index");
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("problem", cfg.problem);
  get("dx", cfg.dx);
  get("dv", cfg.dv);
  get("alpha", cfg.alpha);
  get("k", cfg.k);
  get("v0", cfg.v0);
  get("v_max", cfg.v_max);
  if (j.contains("n")) {
    if (j.at("n").is_array())
      cfg.n = j.at("n").get<std::vector<i64>>();
    else
      cfg.n = {j.at("n").get<i64>()};
  }
  get("cfl", cfg.cfl);
  get("eps_base", cfg.eps_base);
  get("gamma", cfg.gamma);
  get("r_min", cfg.r_min);
  get("r_max", cfg.r_max);
  get("min_leaf_rank", cfg.min_leaf_rank);
  get("r_hash_min", cfg.r_hash_min);
  get("r_hash_max", cfg.r_hash_max);
  get("tree_strategy", cfg.tree_strategy);
  get("mode_order", cfg.mode_order);
  get("t_final", cfg.t_final);
  get("output_dir", cfg.output_dir);
  get("seed", cfg.seed);
  get("checkpoint_interval", cfg.checkpoint_interval);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["problem"] = problem;
  j["dx"] = dx;
  j["dv"] = dv;
  j["alpha"] = alpha;
  j["k"] = k;
  j["v0"] = v0;
  j["v_max"] = v_max;
  j["n"] = n;
  j["cfl"] = cfl;
  j["eps_base"] = eps_base;
  j["gamma"] = gamma;
  j["r_min"] = r_min;
  j["r_max"] = r_max;
  j["min_leaf_rank"] = min_leaf_rank;
  j["r_hash_min"] = r_hash_min;
  j["r_hash_max"] = r_hash_max;
  j["tree_strategy"] = tree_strategy;
  j["mode_order"] = mode_order;
  j["t_final"] = t_final;
  j["output_dir"] = output_dir;
  j["seed"] = seed;
  j["checkpoint_interval"] = checkpoint_interval;
  return j;
}

void RunConfig::validate() const {
  require(problem == "landau" || problem == "two-stream", "config: unknown problem");
  require(dx >= 1 && dv >= 1, "config: dimensions must be positive");
  require(alpha >= 0.0, "config: alpha must be nonnegative");
  require(k > 0.0 && cfl > 0.0 && eps_base > 0.0, "config: positive k, CFL, eps_base required");
  require(v_max >= 0.0, "config: v_max must be nonnegative");
  require(!n.empty(), "config: grid counts missing");
  if (problem == "landau" && dx == 3 && alpha > 1.0 / 3.0 + 1e-12)
    throw ConfigError("config: 3D Landau alpha must stay at or below 1/3");
}

std::vector<std::string> RunConfig::ordering() const {
  if (!mode_order.empty()) {
    require(static_cast<int>(mode_order.size()) == dims(), "config: mode ordering arity mismatch");
    // Relative order within each group must be ascending.
    int last_x = 0, last_v = 0;
    int seen_x = 0, seen_v = 0;
    for (const std::string& label : mode_order) {
      const ModeLabel m = parse_label(label);
      if (m.spatial) {
        require(m.component == last_x + 1, "config: spatial labels must appear in order");
        last_x = m.component;
        ++seen_x;
      } else {
        require(m.component == last_v + 1, "config: velocity labels must appear in order");
        last_v = m.component;
        ++seen_v;
      }
    }
    require(seen_x == dx && seen_v == dv, "config: ordering does not match dx/dv");
    return mode_order;
  }
  // Same-dimension pairing by default.
  std::vector<std::string> out;
  const int pairs = std::min(dx, dv);
  for (int j = 1; j <= pairs; ++j) {
    out.push_back("x" + std::to_string(j));
    out.push_back("v" + std::to_string(j));
  }
  for (int j = pairs + 1; j <= dx; ++j) out.push_back("x" + std::to_string(j));
  for (int j = pairs + 1; j <= dv; ++j) out.push_back("v" + std::to_string(j));
  return out;
}

PhaseSpaceGrid RunConfig::grid() const {
  const std::vector<std::string> order = ordering();
  const double vmax = v_max > 0.0 ? v_max : (problem == "two-stream" ? 8.0 : 2.0 * M_PI);
  const double length = 2.0 * M_PI / k;
  PhaseSpaceGrid g;
  for (int m = 0; m < dims(); ++m) {
    const ModeLabel label = parse_label(order[static_cast<size_t>(m)]);
    const i64 count = n.size() == 1 ? n[0] : n[static_cast<size_t>(m)];
    require(count >= 4, "config: at least 4 points per mode required");
    GridMode mode;
    mode.count = count;
    if (label.spatial) {
      mode.lo = 0.0;
      mode.hi = length;
      mode.boundary = BoundaryKind::kPeriodic;
      mode.role = ModeRole::kSpatial;
    } else {
      mode.lo = -vmax;
      mode.hi = vmax;
      mode.boundary = BoundaryKind::kTruncatedBox;
      mode.role = ModeRole::kVelocity;
    }
    g.modes.push_back(mode);
  }
  return g;
}

TreePtr RunConfig::tree() const {
  TreeStrategy strategy;
  if (tree_strategy == "balanced") {
    strategy = TreeStrategy::kBalanced;
  } else if (tree_strategy == "paired-unbalanced") {
    strategy = TreeStrategy::kPairedUnbalanced;
  } else if (tree_strategy.empty()) {
    strategy = dims() >= 6 ? TreeStrategy::kPairedUnbalanced : TreeStrategy::kBalanced;
  } else {
    throw ConfigError("config: unknown tree strategy " + tree_strategy);
  }
  return build_tree(dims(), strategy);
}

AcaParams RunConfig::aca_params() const {
  AcaParams p;
  p.eps_base = eps_base;
  p.gamma = gamma;
  p.r_min = r_min;
  p.r_max = r_max > 0 ? r_max : kUnboundedRank;
  p.r_min_leaf = min_leaf_rank;
  p.r_hash_min = r_hash_min;
  p.r_hash_max = r_hash_max;
  p.rng_seed = seed;
  return p;
}

HTTensor build_initial_condition(const RunConfig& cfg) {
  cfg.validate();
  const PhaseSpaceGrid grid = cfg.grid();
  const TreePtr tree = cfg.tree();
  const std::vector<std::string> order = cfg.ordering();
  const bool two_stream = cfg.problem == "two-stream";

  // Term bookkeeping: tag 0 is the unperturbed product, tag j the term
  // carrying cos(k x_j). Restricted to a node, every term maps to a
  // coefficient vector over that node's columns.
  struct NodeBasis {
    std::vector<int> tags;
    std::vector<Eigen::VectorXcd> coeffs;  // per global tag 0..dx
  };

  const DimensionTree& t = *tree;
  const bool perturbed = cfg.alpha != 0.0;
  std::vector<NodeBasis> basis(static_cast<size_t>(t.num_nodes()));
  std::vector<MatX> frames(static_cast<size_t>(t.num_nodes()));
  std::vector<MatX> transfers(static_cast<size_t>(t.num_nodes()));

  auto spatial_tag_of_mode = [&](int mode) {
    const ModeLabel label = parse_label(order[static_cast<size_t>(mode - 1)]);
    return label.spatial && perturbed ? label.component : 0;
  };

  for (int id : t.bottom_up()) {
    const auto& node = t.node(id);
    NodeBasis& nb = basis[static_cast<size_t>(id)];
    nb.coeffs.assign(static_cast<size_t>(cfg.dx + 1), Eigen::VectorXcd());

    if (node.leaf()) {
      const int mode = node.modes[0];
      const GridMode& g = grid.mode(mode);
      const ModeLabel label = parse_label(order[static_cast<size_t>(mode - 1)]);
      if (label.spatial && perturbed) {
        MatX u(g.count, 2);
        for (i64 i = 1; i <= g.count; ++i) {
          u(i - 1, 0) = 1.0;
          u(i - 1, 1) = std::cos(cfg.k * g.center(i));
        }
        frames[static_cast<size_t>(id)] = std::move(u);
        nb.tags = {0, label.component};
        for (int tag = 0; tag <= cfg.dx; ++tag) {
          Eigen::VectorXcd c = Eigen::VectorXcd::Zero(2);
          c(tag == label.component ? 1 : 0) = 1.0;
          nb.coeffs[static_cast<size_t>(tag)] = c;
        }
      } else if (label.spatial) {
        frames[static_cast<size_t>(id)] = MatX::Ones(g.count, 1);
        nb.tags = {0};
        for (int tag = 0; tag <= cfg.dx; ++tag)
          nb.coeffs[static_cast<size_t>(tag)] = Eigen::VectorXcd::Ones(1);
      } else if (two_stream) {
        MatX u(g.count, 2);
        for (i64 i = 1; i <= g.count; ++i) {
          const double v = g.center(i);
          u(i - 1, 0) = std::exp(-0.5 * (v - cfg.v0) * (v - cfg.v0));
          u(i - 1, 1) = std::exp(-0.5 * (v + cfg.v0) * (v + cfg.v0));
        }
        frames[static_cast<size_t>(id)] = std::move(u);
        nb.tags = {0};
        Eigen::VectorXcd c(2);
        c << 1.0, 1.0;
        for (int tag = 0; tag <= cfg.dx; ++tag) nb.coeffs[static_cast<size_t>(tag)] = c;
      } else {
        MatX u(g.count, 1);
        for (i64 i = 1; i <= g.count; ++i) {
          const double v = g.center(i);
          u(i - 1, 0) = std::exp(-0.5 * v * v);
        }
        frames[static_cast<size_t>(id)] = std::move(u);
        nb.tags = {0};
        for (int tag = 0; tag <= cfg.dx; ++tag)
          nb.coeffs[static_cast<size_t>(tag)] = Eigen::VectorXcd::Ones(1);
      }
      continue;
    }

    const NodeBasis& lb = basis[static_cast<size_t>(node.left)];
    const NodeBasis& rb = basis[static_cast<size_t>(node.right)];
    const i64 rl = lb.coeffs[0].size();
    const i64 rr = rb.coeffs[0].size();

    nb.tags = {0};
    for (int m : node.modes) {
      const int tag = spatial_tag_of_mode(m);
      if (tag > 0) nb.tags.push_back(tag);
    }
    std::sort(nb.tags.begin() + 1, nb.tags.end());

    if (id != t.root()) {
      const i64 cols = static_cast<i64>(nb.tags.size());
      MatX b = MatX::Zero(rl * rr, cols);
      for (i64 c = 0; c < cols; ++c) {
        const int tag = nb.tags[static_cast<size_t>(c)];
        const Eigen::VectorXcd& cl = lb.coeffs[static_cast<size_t>(tag)];
        const Eigen::VectorXcd& cr = rb.coeffs[static_cast<size_t>(tag)];
        for (i64 q = 0; q < rr; ++q)
          for (i64 p = 0; p < rl; ++p) b(p + q * rl, c) += cl(p) * cr(q);
      }
      transfers[static_cast<size_t>(id)] = std::move(b);
      for (int tag = 0; tag <= cfg.dx; ++tag) {
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(cols);
        const auto it = std::find(nb.tags.begin(), nb.tags.end(), tag);
        c(it == nb.tags.end() ? 0 : std::distance(nb.tags.begin(), it)) = 1.0;
        nb.coeffs[static_cast<size_t>(tag)] = c;
      }
    } else {
      const double prefactor =
          two_stream ? 1.0 / (std::pow(2.0, cfg.dx) * std::pow(2.0 * M_PI, 0.5 * cfg.dx))
                     : 1.0 / std::pow(2.0 * M_PI, 0.5 * cfg.dx);
      MatX b = MatX::Zero(rl * rr, 1);
      for (int tag = 0; tag <= cfg.dx; ++tag) {
        const double weight = prefactor * (tag == 0 ? 1.0 : cfg.alpha);
        const Eigen::VectorXcd& cl = lb.coeffs[static_cast<size_t>(tag)];
        const Eigen::VectorXcd& cr = rb.coeffs[static_cast<size_t>(tag)];
        for (i64 q = 0; q < rr; ++q)
          for (i64 p = 0; p < rl; ++p) b(p + q * rl, 0) += weight * cl(p) * cr(q);
      }
      transfers[static_cast<size_t>(id)] = std::move(b);
    }
  }
  return HTTensor(tree, grid.shape(), std::move(frames), std::move(transfers));
}

std::string csv_header(int dv) {
  std::string h = "step,time,dt,electric_energy,mass";
  for (int j = 1; j <= dv; ++j) h += ",momentum_" + std::to_string(j);
  h += ",total_energy,compression_ratio,max_rank,accessor_evals,min_entry";
  return h;
}

std::string csv_row(i64 step, const DiagnosticsRecord& rec) {
  std::string row = std::to_string(step);
  row += "," + format_double(rec.time);
  row += "," + format_double(rec.dt);
  row += "," + format_double(rec.electric_energy);
  row += "," + format_double(rec.mass);
  for (double p : rec.momentum) row += "," + format_double(p);
  row += "," + format_double(rec.total_energy);
  row += "," + format_double(rec.compression_ratio);
  row += "," + std::to_string(rec.max_rank);
  row += "," + std::to_string(rec.accessor_evals);
  row += "," + format_double(rec.min_entry);
  return row;
}

namespace {

std::string resolved_output_dir(const RunConfig& cfg) {
  if (const char* env = std::getenv("SLAR_OUTPUT_DIR")) return env;
  return cfg.output_dir;
}

void save_checkpoint(const std::string& path, const RunConfig& cfg, const HTTensor& f, double t,
                     i64 step) {
  nlohmann::json meta;
  meta["config"] = cfg.to_json();
  meta["time"] = t;
  meta["step"] = step;
  save_ht_file(path, f, meta);
}

}  // namespace

RunResult run_benchmark(const RunConfig& cfg, const std::string& resume_checkpoint) {
  cfg.validate();
  const PhaseSpaceGrid grid = cfg.grid();
  const AcaParams base_params = cfg.aca_params();

  namespace fs = std::filesystem;
  const fs::path out_dir(resolved_output_dir(cfg));
  fs::create_directories(out_dir);

  RunResult result;
  HTTensor f;
  double t = 0.0;
  i64 step = 0;
  bool skip_first_row = false;
  if (!resume_checkpoint.empty()) {
    LoadedHt loaded = load_ht_file(resume_checkpoint);
    f = std::move(loaded.tensor);
    t = loaded.meta.at("time").get<double>();
    step = loaded.meta.at("step").get<i64>();
    skip_first_row = true;  // that state's row belongs to the original run
  } else {
    f = build_initial_condition(cfg);
  }

  const std::string csv_path = (out_dir / "diagnostics.csv").string();
  std::ofstream csv(csv_path, std::ios::trunc);
  if (!csv) throw std::runtime_error("run: cannot open " + csv_path);
  csv << csv_header(cfg.dv) << "\n";
  result.csv_path = csv_path;

  i64 pending_evals = 0;  // work spent producing the state about to be logged
  const double t_end = cfg.t_final;

  auto step_params = [&](i64 s) {
    AcaParams p = base_params;
    p.rng_seed = CounterRng::combine(cfg.seed, static_cast<u64>(s));
    return p;
  };

  try {
    while (true) {
      const FieldSet e_n = solve_field(f, grid, step_params(step));
      double dt = compute_dt(e_n, grid, cfg.cfl);
      const bool done = t >= t_end - 1e-13;
      if (!done && t + dt > t_end) dt = t_end - t;

      if (!skip_first_row) {
        DiagnosticsRecord rec =
            diagnostics(f, e_n, grid, CounterRng::combine(cfg.seed, static_cast<u64>(step)));
        rec.time = t;
        rec.dt = done ? 0.0 : dt;
        rec.accessor_evals = pending_evals;
        csv << csv_row(step, rec) << "\n";
        csv.flush();
        result.history.push_back(rec);
      }
      skip_first_row = false;

      const bool checkpoint_due =
          cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0;
      if (checkpoint_due || done) {
        const std::string name =
            done ? "checkpoint_final.ht" : "checkpoint_" + std::to_string(step) + ".ht";
        const std::string path = (out_dir / name).string();
        save_checkpoint(path, cfg, f, t, step);
        if (done) result.final_checkpoint = path;
      }
      if (done) break;

      SlarStats stats;
      f = cf3_step(f, grid, e_n, t, dt, step_params(step), &stats);
      if (stats.rank_saturated)
        std::cerr << "warning: correction cap reached during step " << step << "\n";
      pending_evals = stats.accessor_evals;
      t += dt;
      ++step;
      ++result.steps;
    }
  } catch (const std::exception& err) {
    std::cerr << "run failed at step " << step << ": " << err.what() << "\n";
    const std::string path =
        (out_dir / ("checkpoint_failed_" + std::to_string(step) + ".ht")).string();
    try {
      save_checkpoint(path, cfg, f, t, step);
    } catch (...) {
    }
    result.exit_code = 1;
    return result;
  }
  return result;
}

SliceResult extract_slice(const HTTensor& f, const PhaseSpaceGrid& grid, int mode_a, int mode_b,
                          const std::vector<double>& fixed) {
  require(mode_a >= 1 && mode_b >= 1 && mode_a <= grid.dims() && mode_b <= grid.dims() &&
              mode_a != mode_b,
          "slice: bad free modes");
  require(static_cast<int>(fixed.size()) == grid.dims() - 2, "slice: one value per fixed mode");

  SliceResult out;
  out.mode_a = mode_a;
  out.mode_b = mode_b;
  MultiIndex idx(static_cast<size_t>(grid.dims()), 1);
  out.snapped.assign(static_cast<size_t>(grid.dims()), 0);
  size_t fixed_pos = 0;
  for (int m = 1; m <= grid.dims(); ++m) {
    if (m == mode_a || m == mode_b) continue;
    // Nearest center; exact midpoints snap to the lower cell.
    const double v = grid.mode(m).boundary == BoundaryKind::kPeriodic
                         ? grid.wrap(m, fixed[fixed_pos])
                         : fixed[fixed_pos];
    const i64 i = grid.locate(m, v);
    idx[static_cast<size_t>(m - 1)] = i;
    out.snapped[static_cast<size_t>(m - 1)] = i;
    ++fixed_pos;
  }
  const i64 na = grid.mode(mode_a).count;
  const i64 nb = grid.mode(mode_b).count;
  for (i64 i = 1; i <= na; ++i) out.coord_a.push_back(grid.mode(mode_a).center(i));
  for (i64 j = 1; j <= nb; ++j) out.coord_b.push_back(grid.mode(mode_b).center(j));
  out.values.resize(static_cast<size_t>(na * nb));
  EntryWorkspace ws;
  for (i64 j = 1; j <= nb; ++j) {
    idx[static_cast<size_t>(mode_b - 1)] = j;
    for (i64 i = 1; i <= na; ++i) {
      idx[static_cast<size_t>(mode_a - 1)] = i;
      out.values[static_cast<size_t>((i - 1) + na * (j - 1))] = ht_entry(f, idx, ws).real();
    }
  }
  return out;
}

void write_slice_csv(std::ostream& out, const SliceResult& slice) {
  out << "coord";
  for (double b : slice.coord_b) out << "," << format_double(b);
  out << "\n";
  const i64 na = static_cast<i64>(slice.coord_a.size());
  for (i64 i = 0; i < na; ++i) {
    out << format_double(slice.coord_a[static_cast<size_t>(i)]);
    for (size_t j = 0; j < slice.coord_b.size(); ++j)
      out << ","
          << format_double(slice.values[static_cast<size_t>(i) + static_cast<size_t>(na) * j]);
    out << "\n";
  }
}

double reversibility_error(const RunConfig& cfg) {
  const PhaseSpaceGrid grid = cfg.grid();
  const AcaParams base_params = cfg.aca_params();
  const HTTensor f0 = build_initial_condition(cfg);

  HTTensor f = f0;
  double t = 0.0;
  i64 step = 0;
  auto advance_span = [&](double span) {
    const double t_stop = t + span;
    while (t < t_stop - 1e-13) {
      AcaParams p = base_params;
      p.rng_seed = CounterRng::combine(cfg.seed, static_cast<u64>(step));
      const FieldSet e_n = solve_field(f, grid, p);
      double dt = compute_dt(e_n, grid, cfg.cfl);
      if (t + dt > t_stop) dt = t_stop - t;
      f = cf3_step(f, grid, e_n, t, dt, p);
      t += dt;
      ++step;
    }
  };

  advance_span(cfg.t_final);
  f = reflect_velocity(f, grid);
  advance_span(cfg.t_final);
  f = reflect_velocity(f, grid);

  const HTTensor diff = ht_add(f, ht_scale(f0, -1.0));
  return ht_norm(diff) * std::sqrt(grid.cell_volume());
}

double fit_order(const std::vector<ConvergenceLevel>& levels, bool error_grows_with_x) {
  require(levels.size() >= 2, "order fit: at least two levels required");
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(levels.size());
  for (const auto& lvl : levels) {
    const double lx = std::log(lvl.x);
    const double ly = std::log(std::max(lvl.error, 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return error_grows_with_x ? slope : -slope;
}

ConvergenceResult spatial_convergence_study(const RunConfig& base, const std::vector<i64>& ns,
                                            const std::vector<double>& tolerances) {
  require(ns.size() == tolerances.size(), "spatial study: one tolerance per level");
  ConvergenceResult out;
  for (size_t lvl = 0; lvl < ns.size(); ++lvl) {
    RunConfig cfg = base;
    cfg.n = {ns[lvl]};
    cfg.eps_base = tolerances[lvl];
    out.levels.push_back({static_cast<double>(ns[lvl]), reversibility_error(cfg)});
  }
  out.fitted_order = fit_order(out.levels, false);
  return out;
}

ConvergenceResult temporal_convergence_study(const RunConfig& base, i64 n, double tolerance,
                                             const std::vector<double>& cfls) {
  ConvergenceResult out;
  for (double cfl : cfls) {
    RunConfig cfg = base;
    cfg.n = {n};
    cfg.eps_base = tolerance;
    cfg.cfl = cfl;
    out.levels.push_back({cfl, reversibility_error(cfg)});
  }
  out.fitted_order = fit_order(out.levels, true);
  return out;
}

ConvergenceResult rotation_convergence_study(const std::vector<i64>& ns) {
  // One-step protocol: exact data in the stencil, dt proportional to h, so
  // the measured decay matches the local error estimate of the scheme.
  ConvergenceResult out;
  VelocityField field;
  field.eval = [](std::span<const double> x, double, std::span<double> a) {
    a[0] = -x[1];
    a[1] = x[0];
  };
  auto exact = [](double x, double y, double t) {
    const double c = std::cos(-t), s = std::sin(-t);
    const double xr = c * x - s * y;
    const double yr = s * x + c * y;
    const double cx = 0.4, sigma = 0.35;
    return std::exp(-((xr - cx) * (xr - cx) + yr * yr) / (2.0 * sigma * sigma));
  };
  for (i64 n : ns) {
    PhaseSpaceGrid grid;
    grid.modes = {GridMode{-M_PI, M_PI, n, BoundaryKind::kTruncatedBox, ModeRole::kSpatial},
                  GridMode{-M_PI, M_PI, n, BoundaryKind::kTruncatedBox, ModeRole::kSpatial}};
    ref::DenseField f =
        ref::sample_grid(grid, [&](std::span<const double> x) { return exact(x[0], x[1], 0.0); });
    const double dt = grid.mode(1).spacing();
    f = ref::advect_step(f, grid, 0.0, dt, field);
    ref::DenseField ref_exact =
        ref::sample_grid(grid, [&](std::span<const double> x) { return exact(x[0], x[1], dt); });
    out.levels.push_back({static_cast<double>(n), ref::l2_diff(f, ref_exact, grid)});
  }
  out.fitted_order = fit_order(out.levels, false);
  return out;
}

}  // namespace slar
