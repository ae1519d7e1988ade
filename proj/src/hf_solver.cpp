#include "strobe/hf_solver.hpp"

#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>

namespace strobe {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Vector newton_solve(const Assembler& as, Vector w, const NewtonOptions& opts, NewtonReport* report,
                    const MapGeometry* geometry) {
  const auto t0 = std::chrono::steady_clock::now();
  const double tol = std::max(opts.rel_tol * std::sqrt(static_cast<double>(w.size())), opts.abs_floor);
  const bool trace = std::getenv("STROBE_TRACE") != nullptr;
  AssemblyOptions ao;
  ao.geometry = geometry;
  NewtonReport rep;
  rep.tolerance = tol;

  Vector R, eps;
  SparseMatrix J;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool frozen = false;
  AssemblyOptions fo = ao;  // residual with the viscosity held at eps

  auto line_search = [&](const Vector& dw, const AssemblyOptions& merit, double r0, double& rt) {
    double s = 1.0;
    for (int b = 0; b < opts.max_backtracks; ++b, s *= 0.5) {
      const Vector wt = w + s * dw;
      try {
        rt = as.residual(wt, merit).norm();
      } catch (const DryState&) {
        continue;
      } catch (const DegenerateMap&) {
        continue;
      }
      if (std::isfinite(rt) && rt * rt <= (1.0 - 2.0 * opts.armijo * s) * r0 * r0) {
        w = wt;
        return true;
      }
    }
    return false;
  };

  double rn = as.residual(w, ao).norm();
  double best = rn;
  int since_best = 0;
  int it = 0;
  for (; it <= opts.max_iter; ++it) {
    if (rn <= tol) {
      rep.converged = true;
      break;
    }
    if (it == opts.max_iter) break;
    if (!frozen) eps = as.viscosity(w);
    fo.viscosity = &eps;
    as.residual_and_jacobian(w, R, J, fo);
    J.makeCompressed();
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw NonConvergence("Newton: singular Jacobian", w);
    const Vector dw = lu.solve(-R);
    if (trace) std::cerr << "newton " << it << (frozen ? " frozen" : "") << " residual " << rn << "\n";
    double rt = 0.0;
    bool ok = false;
    if (!frozen) {
      ok = line_search(dw, ao, rn, rt);
      if (ok && rt < 0.5 * best) {
        best = rt;
        since_best = 0;
      } else if (++since_best >= opts.picard_patience || !ok) {
        frozen = true;
        rep.frozen_at = it;
      }
    }
    if (!ok) {
      ok = line_search(dw, fo, R.norm(), rt);
      if (!ok) {
        rep.iterations = it;
        rep.residual_norm = rn;
        rep.seconds = seconds_since(t0);
        if (report) *report = rep;
        throw NonConvergence("Newton: line search exhausted at residual " + std::to_string(rn), w);
      }
    }
    rn = as.residual(w, frozen ? fo : ao).norm();
  }
  rep.iterations = it;
  rep.residual_norm = rn;
  rep.true_residual_norm = frozen ? as.residual(w, ao).norm() : rn;
  rep.seconds = seconds_since(t0);
  if (report) *report = rep;
  if (!rep.converged) throw NonConvergence("Newton: no convergence in " + std::to_string(opts.max_iter) + " iterations", w);
  return w;
}

Vector solve_hf(const Assembler& as, const NewtonOptions& opts, NewtonReport* report, const Vector* warm,
                const MarchOptions& march) {
  Vector w0;
  double tm = 0.0;
  if (warm) {
    if (warm->size() != as.size()) throw InvalidArgument("warm start has the wrong length");
    w0 = *warm;
  } else {
    const auto t0 = std::chrono::steady_clock::now();
    w0 = initial_guess(as.law(), as.mesh(), as.parameter(), march);
    tm = seconds_since(t0);
  }
  NewtonReport rep;
  try {
    Vector w = newton_solve(as, std::move(w0), opts, &rep);
    rep.march_seconds = tm;
    if (report) *report = rep;
    return w;
  } catch (...) {
    rep.march_seconds = tm;
    if (report) *report = rep;
    throw;
  }
}

SnapshotSet generate_snapshots(ModelPtr law, std::shared_ptr<const SpaceTimeMesh> mesh, const std::vector<Vector>& mus,
                               const NewtonOptions& opts, const MarchOptions& march) {
  if (mus.empty()) throw InvalidArgument("no parameters to solve for");
  const Eigen::Index N = hf_size(*mesh, law->dim());
  std::vector<Vector> sol(mus.size());
  std::vector<NewtonReport> reps(mus.size());
  std::vector<char> ok(mus.size(), 0);
  std::vector<std::string> why(mus.size());
  parallel_for(mus.size(), [&](std::size_t k) {
    Assembler as(law, mesh);
    as.set_parameter(mus[k]);
    try {
      sol[k] = solve_hf(as, opts, &reps[k], nullptr, march);
      ok[k] = 1;
    } catch (const Error& e) {
      why[k] = e.what();
    }
  });
  SnapshotSet out;
  out.model = law->name();
  out.mesh = mesh;
  out.tolerances = opts;
  int n = 0;
  for (char c : ok) n += c;
  out.U.resize(N, n);
  int c = 0;
  for (std::size_t k = 0; k < mus.size(); ++k) {
    if (!ok[k]) {
      std::cerr << "warning: snapshot for mu = " << mus[k].transpose() << " failed: " << why[k] << "\n";
      out.failed.push_back(mus[k]);
      continue;
    }
    out.mus.push_back(mus[k]);
    out.reports.push_back(reps[k]);
    out.U.col(c++) = sol[k];
  }
  return out;
}

}  // namespace strobe
