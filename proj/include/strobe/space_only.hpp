#pragma once

#include "strobe/dg.hpp"
#include "strobe/optimizer.hpp"

#include <vector>

namespace strobe {

struct SliceRegistrationOptions {
  int mbar = 6;          // displacement modes x(L - x) P_m(2x/L - 1)
  int n_max = 3;
  double xi = 1e-4;
  double tol_pod = 1e-4;
  double eps = 0.1;      // 1 + phi' >= eps everywhere
  int points = 0;        // sample points per slice, 0: 4 nx p + 1
  BfgsOptions bfgs;
};

struct SliceBaseline {
  double t = 0.0;
  Vector registered;    // normalized POD eigenvalues of the mapped slices
  Vector unregistered;  // and of the raw slices
  int M = 0;
};

/// Registration in space only: the snapshots are cut at time t, registered with
/// x-only maps by the greedy template procedure, and compressed by L2 POD.
SliceBaseline space_only_baseline(const SpaceTimeMesh& mesh, int D, int component, const Matrix& U, double t,
                                  int template_index, const SliceRegistrationOptions& opts = {});

}  // namespace strobe
