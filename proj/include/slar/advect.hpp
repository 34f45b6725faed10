// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <functional>
#include <memory>

#include "slar/accessor.hpp"
#include "slar/grid.hpp"

namespace slar {

// Advection field a(x, t) over the full phase space.
struct VelocityField {
  std::function<void(std::span<const double> x, double t, std::span<double> a)> eval;
};

// Backward characteristic tracing with Kutta's explicit three-stage scheme.
// The returned foot is wrapped into periodic modes and clamped to truncated
// boxes; each clamp bumps the optional counter.
std::vector<double> trace_rk3(std::span<const double> x, double t_start, double t_end,
                              const VelocityField& field, const PhaseSpaceGrid& grid,
                              std::atomic<i64>* clamp_count = nullptr);

MultiIndex locate_cell(std::span<const double> foot, const PhaseSpaceGrid& grid);

// Quadratic reconstruction over the 1 + 2d + 4*C(d,2) point stencil.
// Canonical stencil value layout: center; then (+e_mu, -e_mu) per mode;
// then per pair mu < nu the four corners (++, --, +-, -+).
constexpr i64 p2_stencil_size(int d) { return 1 + 2 * d + 2 * d * (d - 1); }
constexpr i64 p2_coefficient_count(int d) { return 1 + 2 * d + d * (d - 1) / 2; }

constexpr i64 p2_pair_index(int mu, int nu, int d) {
  return static_cast<i64>(mu - 1) * d - static_cast<i64>(mu) * (mu - 1) / 2 + (nu - mu - 1);
}

template <class T>
struct P2Coefficients {
  int d = 0;
  T a0{};
  std::vector<T> lin;    // d entries
  std::vector<T> quad;   // d entries
  std::vector<T> cross;  // C(d,2) entries in pair order
};

template <class T>
P2Coefficients<T> p2_coefficients(std::span<const T> stencil, int d) {
  require(static_cast<i64>(stencil.size()) == p2_stencil_size(d),
          "p2_coefficients: incomplete stencil");
  P2Coefficients<T> c;
  c.d = d;
  c.a0 = stencil[0];
  c.lin.resize(static_cast<size_t>(d));
  c.quad.resize(static_cast<size_t>(d));
  c.cross.resize(static_cast<size_t>(d * (d - 1) / 2));
  for (int mu = 1; mu <= d; ++mu) {
    const T plus = stencil[static_cast<size_t>(1 + 2 * (mu - 1))];
    const T minus = stencil[static_cast<size_t>(2 + 2 * (mu - 1))];
    c.lin[static_cast<size_t>(mu - 1)] = 0.5 * (plus - minus);
    c.quad[static_cast<size_t>(mu - 1)] = 0.5 * (plus + minus) - c.a0;
  }
  const i64 pair_base = 1 + 2 * d;
  for (int mu = 1; mu <= d; ++mu) {
    for (int nu = mu + 1; nu <= d; ++nu) {
      const i64 base = pair_base + 4 * p2_pair_index(mu, nu, d);
      const T pp = stencil[static_cast<size_t>(base + 0)];
      const T mm = stencil[static_cast<size_t>(base + 1)];
      const T pm = stencil[static_cast<size_t>(base + 2)];
      const T mp = stencil[static_cast<size_t>(base + 3)];
      c.cross[static_cast<size_t>(p2_pair_index(mu, nu, d))] = 0.25 * (pp + mm - pm - mp);
    }
  }
  return c;
}

template <class T>
T p2_evaluate(const P2Coefficients<T>& c, std::span<const double> xi) {
  T v = c.a0;
  for (int mu = 0; mu < c.d; ++mu) {
    const double x = xi[static_cast<size_t>(mu)];
    v += c.lin[static_cast<size_t>(mu)] * x + c.quad[static_cast<size_t>(mu)] * (x * x);
  }
  for (int mu = 1; mu <= c.d; ++mu)
    for (int nu = mu + 1; nu <= c.d; ++nu)
      v += c.cross[static_cast<size_t>(p2_pair_index(mu, nu, c.d))] *
           (xi[static_cast<size_t>(mu - 1)] * xi[static_cast<size_t>(nu - 1)]);
  return v;
}

// Evaluates every P2-stencil entry of an HT tensor around a center index in
// one pass, sharing per-node contractions between stencil points. Row input:
// 3 row indices per mode (offsets -1, 0, +1), 0 meaning "read as zero".
// Holds scratch space; use one instance per thread.
class HtStencilEvaluator {
 public:
  explicit HtStencilEvaluator(std::shared_ptr<const HTTensor> t);

  void evaluate(std::span<const i64> rows, std::span<cplx> out);
  const HTTensor& tensor() const { return *t_; }

 private:
  struct NodePlan {
    std::vector<std::array<int, 4>> sigs;            // (mode_a, da, mode_b, db); 0 = none
    std::vector<std::pair<int, int>> child_slots;    // per sig, child sig positions
  };
  std::shared_ptr<const HTTensor> t_;
  std::vector<int> order_;  // bottom-up node ids
  std::vector<NodePlan> plans_;
  std::vector<std::vector<VecX>> work_;
};

// Stencil row indices around a center cell: wraps periodic modes, returns 0
// (zero read) outside truncated boxes.
void stencil_rows(const PhaseSpaceGrid& grid, std::span<const i64> center, std::span<i64> rows);

// Accessor producing solution values at t_np1: trace back, locate the cell,
// gather the stencil from f_prev, reconstruct, evaluate at the foot.
EntryAccessor sl_accessor(std::shared_ptr<const HTTensor> f_prev, const PhaseSpaceGrid& grid,
                          double t_n, double t_np1, VelocityField field,
                          std::shared_ptr<std::atomic<i64>> clamp_count = nullptr);

// Off-grid reconstruction of HT-format field components on the spatial grid;
// real parts are taken at extraction.
std::vector<double> eval_field_offgrid(std::span<const HTTensor* const> components,
                                       std::span<const double> x, const PhaseSpaceGrid& spatial);

}  // namespace slar
