#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>

namespace akg {

template <typename Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using SparseVector = Eigen::SparseVector<Scalar>;

namespace detail {

// dot / sqrt(|a|^2 |b|^2) rather than dot / (|a| |b|): sqrt(fl(x*x)) == x,
// so cos(v, v) comes out as exactly 1.
template <typename Scalar>
Scalar cosine_from_parts(Scalar dot, Scalar norm2_a, Scalar norm2_b) {
  if (norm2_a <= Scalar(0) || norm2_b <= Scalar(0)) return Scalar(0);
  Scalar c = dot / std::sqrt(norm2_a * norm2_b);
  return std::clamp(c, Scalar(-1), Scalar(1));
}

}  // namespace detail

/// Cosine of two dense vectors, 0 when either is the zero vector.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  eigen_assert(a.size() == b.size());
  return detail::cosine_from_parts<Scalar>(a.dot(b), a.squaredNorm(), b.squaredNorm());
}

/// Cosine of two sparse vectors of the same dimension.
template <typename Scalar>
Scalar cosine(const SparseVector<Scalar>& a, const SparseVector<Scalar>& b) {
  eigen_assert(a.size() == b.size());
  return detail::cosine_from_parts<Scalar>(a.dot(b), a.squaredNorm(), b.squaredNorm());
}

/// Element-wise product of two sparse vectors restricted to their common support.
template <typename Scalar>
SparseVector<Scalar> support_product(const SparseVector<Scalar>& a, const SparseVector<Scalar>& b) {
  return a.cwiseProduct(b).pruned();
}

}  // namespace akg
