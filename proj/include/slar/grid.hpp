// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "slar/common.hpp"

namespace slar {

enum class BoundaryKind { kPeriodic, kTruncatedBox };
enum class ModeRole { kSpatial, kVelocity };

struct GridMode {
  double lo = 0.0;
  double hi = 1.0;
  i64 count = 1;
  BoundaryKind boundary = BoundaryKind::kPeriodic;
  ModeRole role = ModeRole::kSpatial;

  double length() const { return hi - lo; }
  double spacing() const { return length() / static_cast<double>(count); }
  double center(i64 i) const { return lo + (static_cast<double>(i) - 0.5) * spacing(); }
};

// Uniform Cartesian mesh over the phase-space modes, cell centers at
// lo + (i - 1/2) dx. Periodic modes wrap, truncated-box modes clamp.
struct PhaseSpaceGrid {
  std::vector<GridMode> modes;

  int dims() const { return static_cast<int>(modes.size()); }
  const GridMode& mode(int m) const { return modes[static_cast<size_t>(m - 1)]; }

  std::vector<i64> shape() const {
    std::vector<i64> s(modes.size());
    for (size_t m = 0; m < modes.size(); ++m) s[m] = modes[m].count;
    return s;
  }

  double wrap(int m, double x) const {
    const GridMode& g = mode(m);
    const double y = x - g.length() * std::floor((x - g.lo) / g.length());
    return y >= g.hi ? g.lo : y;  // guards the x == hi roundoff case
  }

  // Cell index with faces assigned to the lower cell.
  i64 locate(int m, double x) const {
    const GridMode& g = mode(m);
    const double u = (x - g.lo) / g.spacing();
    i64 i = static_cast<i64>(std::ceil(u));
    if (i < 1) i = 1;
    if (i > g.count) i = g.count;
    return i;
  }

  std::vector<int> spatial_modes() const {
    std::vector<int> out;
    for (int m = 1; m <= dims(); ++m)
      if (mode(m).role == ModeRole::kSpatial) out.push_back(m);
    return out;
  }

  std::vector<int> velocity_modes() const {
    std::vector<int> out;
    for (int m = 1; m <= dims(); ++m)
      if (mode(m).role == ModeRole::kVelocity) out.push_back(m);
    return out;
  }

  PhaseSpaceGrid spatial_restriction() const {
    PhaseSpaceGrid g;
    for (const GridMode& m : modes)
      if (m.role == ModeRole::kSpatial) g.modes.push_back(m);
    return g;
  }

  double cell_volume() const {
    double v = 1.0;
    for (const GridMode& m : modes) v *= m.spacing();
    return v;
  }
};

// Discrete wavenumbers 2*pi*m/L with m in {0, 1, ..., N/2-1, -N/2, ..., -1}.
std::vector<double> spectral_wavenumbers(double length, i64 count);

struct SpectralGrid {
  std::vector<std::vector<double>> k;  // per spatial mode

  static SpectralGrid from_grid(const PhaseSpaceGrid& spatial) {
    SpectralGrid s;
    for (const GridMode& m : spatial.modes) s.k.push_back(spectral_wavenumbers(m.length(), m.count));
    return s;
  }
};

}  // namespace slar
