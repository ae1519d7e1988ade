#include "strobe/reference_element.hpp"

#include <cmath>

namespace strobe {

namespace {

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

ReferenceTriangle::ReferenceTriangle(int p) : p_(p) {
  if (p < 1 || p > 3) throw InvalidArgument("ReferenceTriangle: order must be 1, 2 or 3");
  n_ = (p + 1) * (p + 2) / 2;
  for (int j = 0; j <= p; ++j) {
    for (int i = 0; i + j <= p; ++i) {
      nodes_.emplace_back(static_cast<double>(i) / p, static_cast<double>(j) / p);
    }
  }
  for (int total = 0; total <= p; ++total) {
    for (int b = 0; b <= total; ++b) exponents_.push_back({total - b, b});
  }

  Matrix vandermonde(n_, n_);
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < n_; ++c) {
      vandermonde(r, c) = ipow(nodes_[r].x(), exponents_[c][0]) * ipow(nodes_[r].y(), exponents_[c][1]);
    }
  }
  coeffs_ = vandermonde.inverse();

  volume_rule_ = triangle_rule(2 * p + 1);
  edge_rule_ = gauss_legendre(p + 1);

  const auto nq = static_cast<Eigen::Index>(volume_rule_.size());
  vol_values_.resize(nq, n_);
  vol_dxi_.resize(nq, n_);
  vol_deta_.resize(nq, n_);
  for (Eigen::Index q = 0; q < nq; ++q) {
    vol_values_.row(q) = values(volume_rule_.points[q]).transpose();
    const auto g = gradients(volume_rule_.points[q]);
    vol_dxi_.row(q) = g.col(0).transpose();
    vol_deta_.row(q) = g.col(1).transpose();
  }
  const auto nqe = static_cast<Eigen::Index>(edge_rule_.size());
  for (int e = 0; e < 3; ++e) {
    edge_values_[e].resize(nqe, n_);
    edge_dxi_[e].resize(nqe, n_);
    edge_deta_[e].resize(nqe, n_);
    for (Eigen::Index q = 0; q < nqe; ++q) {
      const Vec2 xi = edge_point(e, edge_rule_.points[q].x());
      edge_values_[e].row(q) = values(xi).transpose();
      const auto g = gradients(xi);
      edge_dxi_[e].row(q) = g.col(0).transpose();
      edge_deta_[e].row(q) = g.col(1).transpose();
    }
  }
  const Eigen::Map<const Vector> w(volume_rule_.weights.data(), nq);
  mass_ = vol_values_.transpose() * w.asDiagonal() * vol_values_;

  // Nodal representation of the monomials of degree <= p-1 spans Pi_{p-1}.
  const int m = p * (p + 1) / 2;
  Matrix low(n_, m);
  for (int r = 0; r < n_; ++r) {
    for (int c = 0; c < m; ++c) {
      low(r, c) = ipow(nodes_[r].x(), exponents_[c][0]) * ipow(nodes_[r].y(), exponents_[c][1]);
    }
  }
  const Matrix gram = low.transpose() * mass_ * low;
  const Matrix projector = low * gram.ldlt().solve(low.transpose() * mass_);
  const Matrix residual = Matrix::Identity(n_, n_) - projector;
  high_mode_form_ = residual.transpose() * mass_ * residual;
}

Vector ReferenceTriangle::values(const Vec2& xi) const {
  Vector mono(n_);
  for (int c = 0; c < n_; ++c) mono(c) = ipow(xi.x(), exponents_[c][0]) * ipow(xi.y(), exponents_[c][1]);
  return coeffs_.transpose() * mono;
}

Eigen::MatrixX2d ReferenceTriangle::gradients(const Vec2& xi) const {
  Matrix dmono(n_, 2);
  for (int c = 0; c < n_; ++c) {
    const int a = exponents_[c][0];
    const int b = exponents_[c][1];
    dmono(c, 0) = a == 0 ? 0.0 : a * ipow(xi.x(), a - 1) * ipow(xi.y(), b);
    dmono(c, 1) = b == 0 ? 0.0 : b * ipow(xi.x(), a) * ipow(xi.y(), b - 1);
  }
  return coeffs_.transpose() * dmono;
}

Vec2 ReferenceTriangle::edge_point(int edge, double s) {
  switch (edge) {
    case 0: return Vec2(s, 0.0);
    case 1: return Vec2(1.0 - s, s);
    case 2: return Vec2(0.0, 1.0 - s);
    default: throw InvalidArgument("edge_point: local edge out of range");
  }
}

}  // namespace strobe
