#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <utility>

#include "dpmg/linalg.hpp"

namespace dpmg {

// Invertible affine map g(x) = C x + b. Singular C (|det C| below 1e-12 of
// the entry scale to the d-th power) is rejected at construction.
class AffineMap {
 public:
  AffineMap(MatrixXd C, VectorXd b) : C_(std::move(C)), b_(std::move(b)) {
    const Eigen::Index d = C_.rows();
    if (d == 0 || C_.cols() != d || b_.size() != d) {
      throw validation_error("AffineMap: C must be square and match b");
    }
    Eigen::PartialPivLU<MatrixXd> lu(C_);
    const double det = lu.determinant();
    const double scale = C_.cwiseAbs().maxCoeff();
    if (!(std::abs(det) > 1e-12 * std::pow(scale, static_cast<double>(d)))) {
      throw validation_error("AffineMap: C is singular");
    }
    log_abs_det_ = std::log(std::abs(det));
    diagonal_ = true;
    for (Eigen::Index i = 0; i < d && diagonal_; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        if (i != j && C_(i, j) != 0.0) {
          diagonal_ = false;
          break;
        }
      }
    }
  }

  static AffineMap identity(Eigen::Index d) {
    return AffineMap(MatrixXd::Identity(d, d), VectorXd::Zero(d));
  }

  static AffineMap diagonal(const VectorXd& scales, const VectorXd& offset) {
    MatrixXd C = MatrixXd::Zero(scales.size(), scales.size());
    C.diagonal() = scales;
    return AffineMap(C, offset);
  }

  static AffineMap scaling(double c, Eigen::Index d) {
    return AffineMap(c * MatrixXd::Identity(d, d), VectorXd::Zero(d));
  }

  Eigen::Index dim() const { return C_.rows(); }
  const MatrixXd& C() const { return C_; }
  const VectorXd& b() const { return b_; }
  double log_abs_det() const { return log_abs_det_; }
  double abs_det() const { return std::exp(log_abs_det_); }
  bool is_diagonal() const { return diagonal_; }

  VectorXd apply(const VectorXd& x) const { return C_ * x + b_; }

  // Rows of data are observations.
  MatrixXd apply_data(const MatrixXd& data) const {
    if (data.cols() != dim()) throw validation_error("AffineMap: data dimension mismatch");
    MatrixXd out = data * C_.transpose();
    out.rowwise() += b_.transpose();
    return out;
  }

  AffineMap inverse() const {
    const Eigen::Index d = dim();
    MatrixXd Cinv;
    if (diagonal_) {
      Cinv = MatrixXd::Zero(d, d);
      for (Eigen::Index i = 0; i < d; ++i) Cinv(i, i) = 1.0 / C_(i, i);
    } else {
      Cinv = C_.partialPivLu().inverse();
    }
    return AffineMap(Cinv, -(Cinv * b_));
  }

  // Composition: returns the map x -> this(other(x)).
  AffineMap after(const AffineMap& other) const {
    return AffineMap(C_ * other.C_, C_ * other.b_ + b_);
  }

 private:
  MatrixXd C_;
  VectorXd b_;
  double log_abs_det_ = 0.0;
  bool diagonal_ = true;
};

inline MatrixXd apply_affine(const MatrixXd& data, const AffineMap& g) {
  return g.apply_data(data);
}

// Component-wise standardization; the returned diagonal map reproduces the
// standardized data when applied to the input.
struct StandardizeResult {
  MatrixXd data;
  AffineMap map;
};

inline StandardizeResult standardize(const MatrixXd& data) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) throw validation_error("standardize: need at least two rows");
  VectorXd mean = data.colwise().mean();
  VectorXd scales(d);
  VectorXd offset(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double ss = (data.col(j).array() - mean(j)).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) {
      throw validation_error("standardize: column " + std::to_string(j) +
                             " has zero variance");
    }
    scales(j) = 1.0 / sd;
    offset(j) = -mean(j) / sd;
  }
  AffineMap g = AffineMap::diagonal(scales, offset);
  return {g.apply_data(data), g};
}

}  // namespace dpmg
