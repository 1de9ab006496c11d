#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <utility>

#include "dpmg/common.hpp"

namespace dpmg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Lower Cholesky factor. Rejects non-SPD input, naming the failing pivot;
// pivots below 1e-12 of the largest diagonal entry count as singular rather
// than being jittered.
inline MatrixXd cholesky_lower(const MatrixXd& m) {
  const Eigen::Index d = m.rows();
  if (d == 0 || m.cols() != d) {
    throw validation_error("cholesky: matrix must be square and non-empty");
  }
  const double pivot_floor = 1e-12 * m.diagonal().maxCoeff();
  MatrixXd L = MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double pivot = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
    if (!(pivot > 0.0) || pivot < pivot_floor) {
      throw numeric_error("matrix not positive definite: pivot " +
                          std::to_string(j) + " = " + std::to_string(pivot));
    }
    const double ljj = std::sqrt(pivot);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / ljj;
    }
  }
  return L;
}

// Solve L y = v for lower-triangular L.
inline VectorXd forward_solve(const MatrixXd& L, const VectorXd& v) {
  const Eigen::Index d = L.rows();
  VectorXd y(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double s = v(i);
    for (Eigen::Index k = 0; k < i; ++k) s -= L(i, k) * y(k);
    y(i) = s / L(i, i);
  }
  return y;
}

// Solve L^T y = v for lower-triangular L.
inline VectorXd backward_solve(const MatrixXd& L, const VectorXd& v) {
  const Eigen::Index d = L.rows();
  VectorXd y(d);
  for (Eigen::Index i = d - 1; i >= 0; --i) {
    double s = v(i);
    for (Eigen::Index k = i + 1; k < d; ++k) s -= L(k, i) * y(k);
    y(i) = s / L(i, i);
  }
  return y;
}

// Symmetric positive-definite matrix with an eagerly cached Cholesky factor.
// Construction symmetrizes (inputs must already be symmetric to 1e-12
// relative) and fails on non-SPD input.
class SPDMatrix {
 public:
  explicit SPDMatrix(MatrixXd m) {
    const Eigen::Index d = m.rows();
    if (d == 0 || m.cols() != d) {
      throw validation_error("SPDMatrix: matrix must be square and non-empty");
    }
    const double scale = m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale) {
      throw validation_error("SPDMatrix: input is not symmetric (max |A - A^T| = " +
                             std::to_string(asym) + ")");
    }
    mat_ = 0.5 * (m + m.transpose());
    chol_ = cholesky_lower(mat_);
    log_det_ = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) log_det_ += 2.0 * std::log(chol_(i, i));
  }

  static SPDMatrix identity(Eigen::Index d) { return SPDMatrix(MatrixXd::Identity(d, d)); }

  // Trusted constructor for hot paths: the caller guarantees that chol is
  // the lower Cholesky factor of m.
  static SPDMatrix from_cholesky(MatrixXd m, MatrixXd chol) {
    SPDMatrix out;
    out.mat_ = std::move(m);
    out.chol_ = std::move(chol);
    out.log_det_ = 0.0;
    for (Eigen::Index i = 0; i < out.chol_.rows(); ++i) {
      out.log_det_ += 2.0 * std::log(out.chol_(i, i));
    }
    return out;
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const MatrixXd& mat() const { return mat_; }
  const MatrixXd& chol_lower() const { return chol_; }
  double log_det() const { return log_det_; }

  // (x)^T M^{-1} (x) via one triangular solve.
  double quad_form_inv(const VectorXd& x) const {
    return quad_form_inv_diff(x, VectorXd::Zero(x.size()));
  }

  // (x - mean)^T M^{-1} (x - mean); stack-buffered for the small dimensions
  // the sampler lives in.
  double quad_form_inv_diff(const VectorXd& x, const VectorXd& mean) const {
    const Eigen::Index d = mat_.rows();
    if (d <= 8) {
      double r[8];
      for (Eigen::Index i = 0; i < d; ++i) r[i] = x(i) - mean(i);
      double q = 0.0;
      for (Eigen::Index i = 0; i < d; ++i) {
        double s = r[i];
        for (Eigen::Index k = 0; k < i; ++k) s -= chol_(i, k) * r[k];
        s /= chol_(i, i);
        r[i] = s;
        q += s * s;
      }
      return q;
    }
    return forward_solve(chol_, x - mean).squaredNorm();
  }

  VectorXd solve(const VectorXd& v) const {
    return backward_solve(chol_, forward_solve(chol_, v));
  }

  MatrixXd inverse() const {
    const Eigen::Index d = dim();
    MatrixXd inv(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      inv.col(j) = solve(VectorXd::Unit(d, j));
    }
    inv = 0.5 * (inv + inv.transpose()).eval();
    return inv;
  }

 private:
  SPDMatrix() = default;

  MatrixXd mat_;
  MatrixXd chol_;
  double log_det_ = 0.0;
};

}  // namespace dpmg
