#pragma once

#include "strobe/models.hpp"

#include <vector>

namespace strobe {

struct MarchOptions {
  int cells = 0;     // 0: four cells per space-time column
  double cfl = 0.3;
};

/// Piecewise-linear (P1 modal) DG history of a 1D march: mean and slope per
/// cell and component at every accepted time level.
class SliceHistory {
 public:
  SliceHistory(double L, int cells, int D) : L_(L), cells_(cells), D_(D) {}

  void push(double t, Matrix mean, Matrix slope);
  int steps() const { return static_cast<int>(times_.size()); }
  const std::vector<double>& times() const { return times_; }
  /// Value at (x, t), linear in time between stored levels.
  State value(double x, double t) const;

 private:
  State level_value(int s, double x) const;

  double L_;
  int cells_, D_;
  std::vector<double> times_;
  std::vector<Matrix> mean_, slope_;  // D x cells
};

/// Explicit SSP-RK2 DG(P1) march with Rusanov fluxes and a minmod limiter.
SliceHistory march_1d(const ConservationLaw& law, const Vector& mu, int cells, double cfl = 0.3);

/// Space-time initial guess: the 1D march sampled at the DG nodes.
Vector initial_guess(const ConservationLaw& law, const SpaceTimeMesh& mesh, const Vector& mu,
                     const MarchOptions& opts = {});

}  // namespace strobe
