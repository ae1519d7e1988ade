#pragma once

#include "strobe/models.hpp"

#include <cstdint>
#include <vector>

namespace strobe {

/// Thin-plate spline interpolant with a linear tail, one per target, on
/// parameters normalized to the unit box. Targets whose cross-validated R^2
/// falls below the gate predict their training mean.
class RbfRegressor {
 public:
  struct Options {
    int folds = 5;
    double r2_min = 0.75;
    std::uint64_t seed = 0;
  };

  RbfRegressor() = default;

  /// mus: one parameter per column (d x n); Y: targets x n.
  static RbfRegressor fit(const ParameterBox& box, const Matrix& mus, const Matrix& Y, const Options& opts);
  static RbfRegressor fit(const ParameterBox& box, const Matrix& mus, const Matrix& Y) { return fit(box, mus, Y, Options{}); }

  Vector predict(const Vector& mu) const;
  int targets() const { return static_cast<int>(mean_.size()); }
  const Vector& r2() const { return r2_; }
  const std::vector<char>& active() const { return active_; }
  const Vector& mean() const { return mean_; }

  // raw state, for persistence
  ParameterBox box;
  Matrix centers;  // normalized, d x n
  Matrix weights;  // (n + d + 1) x targets
  Vector mean_, r2_;
  std::vector<char> active_;
  /// Reassembles a regressor from persisted parts.
  static RbfRegressor from_parts(ParameterBox box, Matrix centers, Matrix weights, Vector mean, Vector r2,
                                 std::vector<char> active);
};

/// Out-of-sample coefficient of determination for one target.
double r_squared(const Vector& truth, const Vector& prediction, double train_mean);

/// Interpolation weights for normalized centers (d x n) and targets (n x m).
Matrix tps_weights(const Matrix& centers, const Matrix& Y);
/// Evaluates the interpolant at a normalized point.
Vector tps_evaluate(const Matrix& centers, const Matrix& weights, const Vector& x);

}  // namespace strobe
