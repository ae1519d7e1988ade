#include "strobe/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace strobe {

namespace {

double tps(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

Matrix normalized(const ParameterBox& box, const Matrix& mus) {
  Matrix X(mus.rows(), mus.cols());
  for (Eigen::Index j = 0; j < mus.cols(); ++j) X.col(j) = box.normalize(mus.col(j));
  return X;
}

}  // namespace

Matrix tps_weights(const Matrix& centers, const Matrix& Y) {
  const Eigen::Index n = centers.cols(), d = centers.rows();
  if (Y.rows() != n) throw InvalidArgument("tps: targets and centers disagree in count");
  if (n < d + 1) throw IllPosedData("tps: too few centers for the linear tail");
  Matrix A = Matrix::Zero(n + d + 1, n + d + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = tps((centers.col(i) - centers.col(j)).norm());
    A(i, n) = A(n, i) = 1.0;
    for (Eigen::Index c = 0; c < d; ++c) A(i, n + 1 + c) = A(n + 1 + c, i) = centers(c, i);
  }
  Matrix rhs = Matrix::Zero(n + d + 1, Y.cols());
  rhs.topRows(n) = Y;
  Eigen::FullPivLU<Matrix> lu(A);
  if (!lu.isInvertible()) throw IllPosedData("tps: singular interpolation system (collinear or repeated centers)");
  return lu.solve(rhs);
}

Vector tps_evaluate(const Matrix& centers, const Matrix& weights, const Vector& x) {
  const Eigen::Index n = centers.cols(), d = centers.rows();
  Vector phi(n + d + 1);
  for (Eigen::Index i = 0; i < n; ++i) phi(i) = tps((centers.col(i) - x).norm());
  phi(n) = 1.0;
  phi.tail(d) = x;
  return weights.transpose() * phi;
}

double r_squared(const Vector& truth, const Vector& prediction, double train_mean) {
  const double ss_res = (truth - prediction).squaredNorm();
  const double ss_tot = (truth.array() - train_mean).matrix().squaredNorm();
  if (!(ss_tot > 0.0)) return 0.0;
  return 1.0 - ss_res / ss_tot;
}

RbfRegressor RbfRegressor::fit(const ParameterBox& box, const Matrix& mus, const Matrix& Yin, const Options& opts) {
  if (mus.cols() != Yin.cols()) throw InvalidArgument("regression: parameters and targets disagree in count");
  if (mus.rows() != box.dim()) throw InvalidArgument("regression: parameter dimension mismatch");
  Matrix X = normalized(box, mus);
  // drop exact repeats with matching targets, reject conflicting ones
  std::vector<int> keep;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    bool dup = false;
    for (int i : keep)
      if ((X.col(i) - X.col(j)).norm() <= 1e-12) {
        if ((Yin.col(i) - Yin.col(j)).norm() > 1e-12 * std::max(1.0, Yin.col(i).norm()))
          throw IllPosedData("regression: repeated parameter with different targets");
        dup = true;
      }
    if (!dup) keep.push_back(static_cast<int>(j));
  }
  const int n = static_cast<int>(keep.size());
  const int m = static_cast<int>(Yin.rows());
  Matrix C(X.rows(), n), Y(n, m);
  for (int j = 0; j < n; ++j) {
    C.col(j) = X.col(keep[j]);
    Y.row(j) = Yin.col(keep[j]).transpose();
  }

  RbfRegressor r;
  r.box = box;
  r.centers = C;
  r.mean_ = Y.colwise().mean().transpose();
  r.r2_ = Vector::Zero(m);
  r.active_.assign(m, 0);

  // k-fold cross validation with pooled out-of-fold predictions
  const int folds = std::clamp(opts.folds, 2, n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(opts.seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  Vector ss_res = Vector::Zero(m), ss_tot = Vector::Zero(m);
  bool cv_ok = true;
  for (int f = 0; f < folds && cv_ok; ++f) {
    std::vector<int> tr, te;
    for (int i = 0; i < n; ++i) (i % folds == f ? te : tr).push_back(order[i]);
    Matrix Ct(C.rows(), tr.size()), Yt(tr.size(), m);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      Ct.col(i) = C.col(tr[i]);
      Yt.row(i) = Y.row(tr[i]);
    }
    Matrix Wt;
    try {
      Wt = tps_weights(Ct, Yt);
    } catch (const IllPosedData&) {
      cv_ok = false;
      break;
    }
    const Vector mt = Yt.colwise().mean().transpose();
    for (int i : te) {
      const Vector p = tps_evaluate(Ct, Wt, C.col(i));
      const Vector y = Y.row(i).transpose();
      ss_res += (y - p).cwiseAbs2();
      ss_tot += (y - mt).cwiseAbs2();
    }
  }
  for (int t = 0; t < m; ++t) {
    r.r2_(t) = cv_ok && ss_tot(t) > 0.0 ? 1.0 - ss_res(t) / ss_tot(t) : 0.0;
    r.active_[t] = r.r2_(t) >= opts.r2_min ? 1 : 0;
  }
  r.weights = tps_weights(C, Y);
  return r;
}

Vector RbfRegressor::predict(const Vector& mu) const {
  if (mu.size() != box.dim()) throw InvalidArgument("regression: parameter dimension mismatch");
  Vector p = tps_evaluate(centers, weights, box.normalize(mu));
  for (Eigen::Index t = 0; t < p.size(); ++t)
    if (!active_[t]) p(t) = mean_(t);
  return p;
}

RbfRegressor RbfRegressor::from_parts(ParameterBox box, Matrix centers, Matrix weights, Vector mean, Vector r2,
                                      std::vector<char> active) {
  RbfRegressor r;
  r.box = std::move(box);
  r.centers = std::move(centers);
  r.weights = std::move(weights);
  r.mean_ = std::move(mean);
  r.r2_ = std::move(r2);
  r.active_ = std::move(active);
  return r;
}

}  // namespace strobe
