// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slar/cross.hpp"
#include "slar/grid.hpp"

namespace slar {

struct FieldSet {
  HTTensor phi_hat;            // frequency-domain potential over the spatial tree
  std::vector<HTTensor> e;     // physical-space field components, one per spatial mode
  HTTensor rho;                // charge density over the spatial tree
  double rho0 = 0.0;           // neutralizing background used for this solve
};

// rho = rho0 - integral of f over the velocity modes (midpoint rule), as an
// HT tensor over the spatial tree. rho0 is the spatial mean of the integral,
// so the source always has zero mean.
HTTensor compute_density(const HTTensor& f, const PhaseSpaceGrid& grid, double* rho0_out = nullptr);

// Column-wise DFT of every leaf frame: forward unnormalized, inverse scaled
// by 1/N.
HTTensor dft_leaves(const HTTensor& t, bool forward);

// FFT-based Poisson solve on a periodic spatial grid. The frequency-domain
// potential is compressed by HTACA at the given tolerance (relative); the
// zero-frequency gauge is enforced exactly. E = -grad(phi) spectrally.
FieldSet solve_poisson(const HTTensor& rho, const PhaseSpaceGrid& spatial, double tol,
                       const AcaParams& params, AcaStats* stats = nullptr);

}  // namespace slar
