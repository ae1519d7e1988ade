#pragma once

#include "strobe/common.hpp"

#include <functional>

namespace strobe {

/// Objective value; fills grad when non-null. Return +inf to reject a point.
using Objective = std::function<double(const Vector& x, Vector* grad)>;

struct BfgsOptions {
  int max_iter = 200;
  double grad_tol = 1e-8;  // on ||grad||_inf / max(1, |f|)
  double f_tol = 1e-12;    // relative decrease over one iteration
  double armijo = 1e-4;
  int max_backtracks = 40;
};

struct BfgsResult {
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Dense BFGS with backtracking line search. Always returns the best point
/// visited; converged is false when the iteration budget ran out or the line
/// search failed away from a stationary point.
BfgsResult bfgs_minimize(const Objective& f, Vector x0, const BfgsOptions& opts = {});

}  // namespace strobe
