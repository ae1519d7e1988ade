#include "strobe/nnls.hpp"

#include <limits>
#include <vector>

namespace strobe {

namespace {

Vector solve_passive(const Matrix& G, const Vector& b, const std::vector<int>& P) {
  Matrix GP(G.rows(), static_cast<Eigen::Index>(P.size()));
  for (std::size_t j = 0; j < P.size(); ++j) GP.col(static_cast<Eigen::Index>(j)) = G.col(P[j]);
  return GP.colPivHouseholderQr().solve(b);
}

}  // namespace

NnlsResult nnls(const Matrix& G, const Vector& b, const NnlsOptions& opts) {
  if (G.rows() != b.size()) throw InvalidArgument("nnls: right-hand side has the wrong length");
  const Eigen::Index n = G.cols();
  const double kkt_tol = opts.kkt_tol > 0.0
                             ? opts.kkt_tol
                             : 10.0 * std::numeric_limits<double>::epsilon() * G.cwiseAbs().colwise().sum().maxCoeff() *
                                   static_cast<double>(std::max(G.rows(), n));
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : static_cast<int>(3 * n);
  NnlsResult res;
  res.x = Vector::Zero(n);
  std::vector<char> passive(n, 0);
  Vector x = res.x;
  int it = 0;
  for (; it < max_iter; ++it) {
    const Vector w = G.transpose() * (b - G * x);
    Eigen::Index j = -1;
    double wmax = kkt_tol;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!passive[i] && w(i) > wmax) {
        wmax = w(i);
        j = i;
      }
    if (j < 0) {
      res.kkt = true;
      break;
    }
    passive[j] = 1;
    const Vector xold = x;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      std::vector<int> P;
      for (Eigen::Index i = 0; i < n; ++i)
        if (passive[i]) P.push_back(static_cast<int>(i));
      const Vector z = solve_passive(G, b, P);
      bool feasible = true;
      for (std::size_t q = 0; q < P.size(); ++q)
        if (z(q) <= 0.0) feasible = false;
      if (feasible) {
        x.setZero();
        for (std::size_t q = 0; q < P.size(); ++q) x(P[q]) = z(q);
        break;
      }
      double alpha = 1.0;
      for (std::size_t q = 0; q < P.size(); ++q)
        if (z(q) <= 0.0) alpha = std::min(alpha, x(P[q]) / (x(P[q]) - z(q)));
      for (std::size_t q = 0; q < P.size(); ++q) x(P[q]) += alpha * (z(q) - x(P[q]));
      for (std::size_t q = 0; q < P.size(); ++q)
        if (x(P[q]) <= 1e-15 * std::max(1.0, xold.cwiseAbs().maxCoeff())) {
          x(P[q]) = 0.0;
          passive[P[q]] = 0;
        }
    }
    if ((x - xold).norm() <= opts.step_tol) {
      ++it;
      break;
    }
  }
  res.x = x;
  res.iterations = it;
  res.residual_norm = (G * x - b).norm();
  return res;
}

}  // namespace strobe
