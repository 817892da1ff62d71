// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>

#include "logo/common.hpp"

namespace logo {

template <typename T>
using MatX = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VecX = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using real = float;
using Mat = MatX<real>;
using Vec = VecX<real>;

template <typename T>
bool all_finite(const MatX<T>& m) {
  return m.allFinite();
}

// Column-wise L2 normalization. Columns are samples throughout this library.
template <typename T>
MatX<T> l2_normalize_cols(const MatX<T>& x) {
  MatX<T> out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    T n = x.col(j).norm();
    LOGO_REQUIRE(n > T(1e-12), "cannot L2-normalize a zero-norm vector");
    out.col(j) = x.col(j) / n;
  }
  return out;
}

// Backward of column-wise L2 normalization: given the unnormalized input x and
// the gradient w.r.t. the normalized output, returns the gradient w.r.t. x.
template <typename T>
MatX<T> l2_normalize_cols_backward(const MatX<T>& x, const MatX<T>& dout) {
  LOGO_REQUIRE(x.rows() == dout.rows() && x.cols() == dout.cols(),
               "normalize backward shape mismatch");
  MatX<T> dx(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    T n = x.col(j).norm();
    LOGO_REQUIRE(n > T(1e-12), "cannot L2-normalize a zero-norm vector");
    VecX<T> u = x.col(j) / n;
    T proj = u.dot(dout.col(j));
    dx.col(j) = (dout.col(j) - u * proj) / n;
  }
  return dx;
}

template <typename T>
bool cols_unit_norm(const MatX<T>& x, T tol) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (std::abs(x.col(j).norm() - T(1)) > tol) return false;
  }
  return true;
}

}  // namespace logo
