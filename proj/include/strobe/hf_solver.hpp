#pragma once

#include "strobe/assembler.hpp"
#include "strobe/rk1d.hpp"

#include <memory>
#include <string>
#include <vector>

namespace strobe {

struct NewtonOptions {
  int max_iter = 50;
  double rel_tol = 1e-8;   // on ||R|| / sqrt(N_hf)
  double abs_floor = 1e-10;
  double armijo = 1e-4;
  int max_backtracks = 30;
  // Picard iterations without halving the residual before the viscosity is frozen
  int picard_patience = 4;
};

struct NewtonReport {
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;
  double tolerance = 0.0;
  double seconds = 0.0;
  double march_seconds = 0.0;
  int frozen_at = -1;              // iteration at which the viscosity was frozen, -1 if never
  double true_residual_norm = 0.0;  // with the viscosity recomputed from the solution
};

/// Newton with backtracking on ||R||_2. The viscosity is frozen inside each
/// Jacobian and recomputed every iteration (Picard); once that stops making
/// progress it is frozen for good and Newton finishes the frozen system.
/// Throws NonConvergence.
Vector newton_solve(const Assembler& as, Vector w, const NewtonOptions& opts = {}, NewtonReport* report = nullptr,
                    const MapGeometry* geometry = nullptr);

/// Full hf solve for the assembler's parameter: 1D march initial guess (or the
/// warm start), then Newton.
Vector solve_hf(const Assembler& as, const NewtonOptions& opts = {}, NewtonReport* report = nullptr,
                const Vector* warm = nullptr, const MarchOptions& march = {});

struct SnapshotSet {
  std::string model;
  std::shared_ptr<const SpaceTimeMesh> mesh;
  std::vector<Vector> mus;
  Matrix U;  // N_hf x n, one converged solution per column
  std::vector<NewtonReport> reports;
  std::vector<Vector> failed;
  NewtonOptions tolerances;

  int size() const { return static_cast<int>(mus.size()); }
};

/// Solves for every parameter in parallel. Failed parameters are dropped with
/// a warning on stderr and listed in `failed`.
SnapshotSet generate_snapshots(ModelPtr law, std::shared_ptr<const SpaceTimeMesh> mesh, const std::vector<Vector>& mus,
                               const NewtonOptions& opts = {}, const MarchOptions& march = {});

}  // namespace strobe
