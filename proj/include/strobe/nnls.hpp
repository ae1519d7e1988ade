#pragma once

#include "strobe/common.hpp"

namespace strobe {

struct NnlsOptions {
  double step_tol = 1e-8;  // stop when ||x_{k+1} - x_k||_2 <= step_tol
  double kkt_tol = 0.0;    // <= 0: 10 eps ||G||_1 max(m, n)
  int max_iter = 0;        // outer iterations, <= 0: 3 n
};

struct NnlsResult {
  Vector x;
  double residual_norm = 0.0;
  int iterations = 0;
  bool kkt = false;  // stopped because the multipliers were all nonpositive
};

/// Lawson-Hanson active set method for min ||G x - b||_2 subject to x >= 0,
/// started from x = 0.
NnlsResult nnls(const Matrix& G, const Vector& b, const NnlsOptions& opts = {});

}  // namespace strobe
