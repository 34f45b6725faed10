// SPDX-License-Identifier: Apache-2.0
#include "slar/dense_ref.hpp"

#include <fftw3.h>

#include "slar/vp.hpp"

namespace slar::ref {

namespace {

i64 dense_linear(std::span<const i64> shape, std::span<const i64> idx) {
  i64 lin = 0, stride = 1;
  for (size_t m = 0; m < shape.size(); ++m) {
    lin += (idx[m] - 1) * stride;
    stride *= shape[m];
  }
  return lin;
}

}  // namespace

double DenseField::at(std::span<const i64> idx) const {
  return values[static_cast<size_t>(dense_linear(shape, idx))];
}

DenseField sample_grid(const PhaseSpaceGrid& grid,
                       const std::function<double(std::span<const double>)>& fn) {
  DenseField f;
  f.shape = grid.shape();
  f.values.resize(static_cast<size_t>(product(f.shape)));
  const int d = grid.dims();
  MultiIndex idx(static_cast<size_t>(d), 1);
  std::vector<double> x(static_cast<size_t>(d));
  for (size_t pos = 0; pos < f.values.size(); ++pos) {
    for (int m = 1; m <= d; ++m)
      x[static_cast<size_t>(m - 1)] = grid.mode(m).center(idx[static_cast<size_t>(m - 1)]);
    f.values[pos] = fn(x);
    for (int m = 0; m < d; ++m) {
      if (++idx[static_cast<size_t>(m)] <= f.shape[static_cast<size_t>(m)]) break;
      idx[static_cast<size_t>(m)] = 1;
    }
  }
  return f;
}

DenseField advect_step(const DenseField& f, const PhaseSpaceGrid& grid, double t0, double t1,
                       const VelocityField& field) {
  const int d = grid.dims();
  DenseField out;
  out.shape = f.shape;
  out.values.resize(f.values.size());

  MultiIndex idx(static_cast<size_t>(d), 1);
  std::vector<double> x(static_cast<size_t>(d));
  std::vector<double> xi(static_cast<size_t>(d));
  std::vector<i64> rows(static_cast<size_t>(3 * d));
  std::vector<double> stencil(static_cast<size_t>(p2_stencil_size(d)));
  std::vector<i64> strides(static_cast<size_t>(d));
  i64 stride = 1;
  for (int m = 0; m < d; ++m) {
    strides[static_cast<size_t>(m)] = stride;
    stride *= f.shape[static_cast<size_t>(m)];
  }

  for (size_t pos = 0; pos < out.values.size(); ++pos) {
    for (int m = 1; m <= d; ++m)
      x[static_cast<size_t>(m - 1)] = grid.mode(m).center(idx[static_cast<size_t>(m - 1)]);
    const std::vector<double> foot = trace_rk3(x, t1, t0, field, grid, nullptr);
    const MultiIndex star = locate_cell(foot, grid);
    stencil_rows(grid, star, rows);

    i64 base = 0;
    for (int m = 0; m < d; ++m)
      base += (star[static_cast<size_t>(m)] - 1) * strides[static_cast<size_t>(m)];
    auto read = [&](int mu, int dmu, int nu, int dnu) -> double {
      i64 lin = base;
      for (int part = 0; part < 2; ++part) {
        const int mode = part == 0 ? mu : nu;
        const int delta = part == 0 ? dmu : dnu;
        if (mode == 0 || delta == 0) continue;
        const i64 row = rows[static_cast<size_t>(3 * (mode - 1) + (delta + 1))];
        if (row == 0) return 0.0;
        lin += (row - star[static_cast<size_t>(mode - 1)]) * strides[static_cast<size_t>(mode - 1)];
      }
      return f.values[static_cast<size_t>(lin)];
    };

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
    for (int m = 1; m <= d; ++m)
      xi[static_cast<size_t>(m - 1)] =
          (foot[static_cast<size_t>(m - 1)] - grid.mode(m).center(star[static_cast<size_t>(m - 1)])) /
          grid.mode(m).spacing();
    out.values[pos] = p2_evaluate(coeffs, xi);

    for (int m = 0; m < d; ++m) {
      if (++idx[static_cast<size_t>(m)] <= f.shape[static_cast<size_t>(m)]) break;
      idx[static_cast<size_t>(m)] = 1;
    }
  }
  return out;
}

double l2_norm(const DenseField& f, const PhaseSpaceGrid& grid) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s * grid.cell_volume());
}

double l2_diff(const DenseField& a, const DenseField& b, const PhaseSpaceGrid& grid) {
  double s = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    const double d = a.values[i] - b.values[i];
    s += d * d;
  }
  return std::sqrt(s * grid.cell_volume());
}

namespace {

// Dense periodic Poisson solve in 1D: returns E with mean-zero potential.
std::vector<double> poisson_1d(const std::vector<double>& rho, double length) {
  const i64 n = static_cast<i64>(rho.size());
  std::vector<cplx> buf(rho.begin(), rho.end());
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_plan fwd = fftw_plan_dft_1d(static_cast<int>(n), data, data, FFTW_FORWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_execute(fwd);
  fftw_destroy_plan(fwd);
  const std::vector<double> k = spectral_wavenumbers(length, n);
  buf[0] = 0.0;
  for (i64 i = 1; i < n; ++i) {
    const double ki = k[static_cast<size_t>(i)];
    buf[static_cast<size_t>(i)] *= cplx(0.0, -ki) / (ki * ki);  // -i k / k^2
  }
  fftw_plan bwd = fftw_plan_dft_1d(static_cast<int>(n), data, data, FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);
  std::vector<double> e(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) e[static_cast<size_t>(i)] = buf[static_cast<size_t>(i)].real() / static_cast<double>(n);
  return e;
}

struct Dense1dField {
  std::vector<double> e;
  PhaseSpaceGrid spatial;
};

VelocityField stage_field_1d(const PhaseSpaceGrid& grid, double v_coef,
                             std::shared_ptr<const std::vector<double>> e) {
  const PhaseSpaceGrid spatial = grid.spatial_restriction();
  VelocityField field;
  field.eval = [spatial, v_coef, e = std::move(e)](std::span<const double> x, double,
                                                   std::span<double> a) {
    a[0] = v_coef * x[1];
    const double xs[1] = {x[0]};
    a[1] = -dense_p2_eval(*e, spatial, xs);
  };
  return field;
}

std::vector<double> solve_field_1d(const DenseField& f, const PhaseSpaceGrid& grid,
                                   double* e_norm) {
  const i64 nx = f.shape[0];
  const i64 nv = f.shape[1];
  const double dv = grid.mode(2).spacing();
  std::vector<double> integral(static_cast<size_t>(nx), 0.0);
  for (i64 j = 0; j < nv; ++j)
    for (i64 i = 0; i < nx; ++i)
      integral[static_cast<size_t>(i)] += f.values[static_cast<size_t>(i + nx * j)] * dv;
  double mean = 0.0;
  for (double v : integral) mean += v;
  mean /= static_cast<double>(nx);
  std::vector<double> rho(static_cast<size_t>(nx));
  for (i64 i = 0; i < nx; ++i) rho[static_cast<size_t>(i)] = mean - integral[static_cast<size_t>(i)];
  std::vector<double> e = poisson_1d(rho, grid.mode(1).length());
  if (e_norm != nullptr) {
    double s = 0.0;
    for (double v : e) s += v * v;
    *e_norm = std::sqrt(s);
  }
  return e;
}

}  // namespace

Vp1dResult run_vp_1d1v(const PhaseSpaceGrid& grid, const DenseField& f0, double t_final,
                       double cfl) {
  require(grid.dims() == 2, "run_vp_1d1v: 1D1V grid expected");
  Vp1dResult res;
  res.f = f0;
  double t = 0.0;
  i64 step = 0;
  const double dx = grid.mode(1).spacing();
  const double dv = grid.mode(2).spacing();
  const double vmax = grid.mode(2).hi;
  const double volume = grid.cell_volume();

  while (true) {
    double e_norm = 0.0;
    auto e = std::make_shared<const std::vector<double>>(solve_field_1d(res.f, grid, &e_norm));

    VpHistoryRow row;
    row.step = step;
    row.time = t;
    double ee = 0.0;
    for (double v : *e) ee += v * v;
    row.electric_energy = 0.5 * ee * dx;
    double mass = 0.0;
    for (double v : res.f.values) mass += v;
    row.mass = mass * volume;

    const double ebar = e_norm / std::sqrt(static_cast<double>(res.f.shape[0]));
    double dt = cfl / (vmax / dx + ebar / dv);
    dt = std::max(dt, 1e-6);
    if (t + dt > t_final) dt = t_final - t;
    row.dt = dt;
    res.history.push_back(row);
    if (t >= t_final || dt <= 0.0) break;

    const double t1 = t + dt;
    DenseField f1 = advect_step(res.f, grid, t, t1, stage_field_1d(grid, kCf3Stage1Coef,
                                                                   std::make_shared<std::vector<double>>([&] {
                                                                     std::vector<double> s(*e);
                                                                     for (double& v : s) v *= kCf3Stage1Coef;
                                                                     return s;
                                                                   }())));
    auto e1 = std::make_shared<const std::vector<double>>(solve_field_1d(f1, grid, nullptr));
    DenseField f2 = advect_step(res.f, grid, t, t1, stage_field_1d(grid, kCf3Stage2Coef,
                                                                   std::make_shared<std::vector<double>>([&] {
                                                                     std::vector<double> s(*e1);
                                                                     for (double& v : s) v *= kCf3Stage2Coef;
                                                                     return s;
                                                                   }())));
    auto e2 = std::make_shared<const std::vector<double>>(solve_field_1d(f2, grid, nullptr));
    std::vector<double> combo(e->size());
    for (size_t i = 0; i < combo.size(); ++i)
      combo[i] = kCf3Stage3EnCoef * (*e)[i] + kCf3Stage3E2Coef * (*e2)[i];
    res.f = advect_step(f1, grid, t, t1,
                        stage_field_1d(grid, kCf3Stage3VCoef,
                                       std::make_shared<std::vector<double>>(std::move(combo))));
    t = t1;
    ++step;
  }
  return res;
}

}  // namespace slar::ref
