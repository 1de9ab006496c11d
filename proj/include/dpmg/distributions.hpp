#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "dpmg/linalg.hpp"
#include "dpmg/rng.hpp"

namespace dpmg {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

// Numerically stable log(sum(exp(values))). Requires at least one finite value.
inline double log_sum_exp(std::span<const double> values) {
  if (values.empty()) throw validation_error("log_sum_exp: empty input");
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (std::isnan(v)) throw numeric_error("log_sum_exp: NaN in input");
    if (v > m) m = v;
  }
  if (!std::isfinite(m)) throw numeric_error("log_sum_exp: no finite value");
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

// Inverse-CDF draw over softmax(log_weights). A pure function of the
// normalized weights and u, so log-weights shifted by a common constant give
// the same index.
inline std::size_t categorical_sample(std::span<const double> log_weights, double u) {
  if (log_weights.empty()) throw validation_error("categorical_sample: empty input");
  if (!(u >= 0.0 && u < 1.0)) throw validation_error("categorical_sample: u outside [0,1)");
  double m = -std::numeric_limits<double>::infinity();
  for (double v : log_weights) {
    if (std::isnan(v)) throw numeric_error("categorical_sample: NaN weight");
    if (v > m) m = v;
  }
  if (!std::isfinite(m)) throw numeric_error("categorical_sample: all weights are -inf");
  double total = 0.0;
  for (double v : log_weights) total += std::exp(v - m);
  const double target = u * total;
  double cum = 0.0;
  for (std::size_t i = 0; i + 1 < log_weights.size(); ++i) {
    cum += std::exp(log_weights[i] - m);
    if (cum > target) return i;
  }
  return log_weights.size() - 1;
}

// log density of N_d(mean, cov) at x.
inline double mvn_logpdf(const VectorXd& x, const VectorXd& mean, const SPDMatrix& cov) {
  if (x.size() != mean.size() || x.size() != cov.dim()) {
    throw validation_error("mvn_logpdf: dimension mismatch");
  }
  const double q = cov.quad_form_inv_diff(x, mean);
  return -0.5 * (static_cast<double>(x.size()) * kLogTwoPi + cov.log_det() + q);
}

// mean + L z with L the cached Cholesky factor of cov and z std-normal.
// The construction (not just the law) is fixed: diagonal scalings of
// (mean, cov) map draws exactly when the underlying z is replayed.
inline VectorXd sample_mvn(const VectorXd& mean, const SPDMatrix& cov, RngStream& rng) {
  if (mean.size() != cov.dim()) throw validation_error("sample_mvn: dimension mismatch");
  const Eigen::Index d = mean.size();
  if (d <= 8) {
    double z[8];
    for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
    VectorXd out(d);
    const MatrixXd& L = cov.chol_lower();
    for (Eigen::Index i = 0; i < d; ++i) {
      double s = mean(i);
      for (Eigen::Index k = 0; k <= i; ++k) s += L(i, k) * z[k];
      out(i) = s;
    }
    return out;
  }
  VectorXd z(d);
  for (Eigen::Index i = 0; i < d; ++i) z(i) = rng.normal();
  return mean + cov.chol_lower() * z;
}

// Marsaglia-Tsang; shape < 1 handled by the boost u^{1/shape}.
inline double sample_gamma(double shape, double rate, RngStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw validation_error("sample_gamma: shape and rate must be positive");
  }
  double boost = 1.0;
  if (shape < 1.0) {
    boost = std::pow(rng.uniform01(), 1.0 / shape);
    shape += 1.0;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return boost * d * v / rate;
    }
  }
}

inline double sample_chi_square(double df, RngStream& rng) {
  return sample_gamma(0.5 * df, 0.5, rng);
}

inline double sample_beta(double a, double b, RngStream& rng) {
  const double x = sample_gamma(a, 1.0, rng);
  const double y = sample_gamma(b, 1.0, rng);
  return x / (x + y);
}

// Bartlett factor A (lower triangular): A_ii = sqrt(chi2_{df-i}),
// A_ij ~ N(0,1) below the diagonal, consumed in row-major order.
inline MatrixXd bartlett_factor(double df, Eigen::Index d, RngStream& rng) {
  MatrixXd A = MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) A(i, j) = rng.normal();
    A(i, i) = std::sqrt(sample_chi_square(df - static_cast<double>(i), rng));
  }
  return A;
}

// W ~ Wishart(df, scale) via W = (L A)(L A)^T, L = chol(scale).
inline SPDMatrix sample_wishart(double df, const SPDMatrix& scale, RngStream& rng) {
  const Eigen::Index d = scale.dim();
  if (!(df > static_cast<double>(d) - 1.0)) {
    throw validation_error("sample_wishart: df must exceed d - 1");
  }
  const MatrixXd M = scale.chol_lower() * bartlett_factor(df, d, rng);
  MatrixXd W = M * M.transpose();
  W = 0.5 * (W + W.transpose()).eval();
  return SPDMatrix(W);
}

namespace detail {
// Inverts W = M M^T given M's Cholesky use: here W is SPD by construction.
inline MatrixXd spd_inverse_of(const MatrixXd& W) {
  return SPDMatrix(W).inverse();
}
}  // namespace detail

// Caches the Cholesky factor of scale^{-1} so repeated draws from a fixed
// inverse-Wishart are cheap. Draws invert a Bartlett Wishart of the
// inverse scale.
class InvWishartSampler {
 public:
  InvWishartSampler(double df, const SPDMatrix& scale)
      : df_(df), dim_(scale.dim()), chol_scale_inv_(cholesky_lower(scale.inverse())) {
    if (!(df > static_cast<double>(dim_) - 1.0)) {
      throw validation_error("sample_inv_wishart: df must exceed d - 1");
    }
  }

  SPDMatrix draw(RngStream& rng) const {
    if (dim_ <= 4) return draw_small(rng);
    const MatrixXd M = chol_scale_inv_ * bartlett_factor(df_, dim_, rng);
    MatrixXd W = M * M.transpose();
    W = 0.5 * (W + W.transpose()).eval();
    return SPDMatrix(detail::spd_inverse_of(W));
  }

  double df() const { return df_; }

 private:
  // Stack-buffered variant for the dimensions the sampler lives in; the
  // variate consumption order is identical to the generic path.
  SPDMatrix draw_small(RngStream& rng) const {
    const int d = static_cast<int>(dim_);
    double A[16] = {0.0}, M[16] = {0.0}, W[16], Lw[16] = {0.0}, inv[16], Ls[16] = {0.0};
    auto at = [d](double* m, int i, int j) -> double& { return m[i * d + j]; };
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < i; ++j) at(A, i, j) = rng.normal();
      at(A, i, i) = std::sqrt(sample_chi_square(df_ - i, rng));
    }
    for (int i = 0; i < d; ++i) {          // M = chol_scale_inv * A (both lower)
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int k = j; k <= i; ++k) s += chol_scale_inv_(i, k) * at(A, k, j);
        at(M, i, j) = s;
      }
    }
    for (int i = 0; i < d; ++i) {          // W = M M^T
      for (int j = 0; j <= i; ++j) {
        double s = 0.0;
        for (int k = 0; k <= j; ++k) s += at(M, i, k) * at(M, j, k);
        at(W, i, j) = s;
        at(W, j, i) = s;
      }
    }
    for (int j = 0; j < d; ++j) {          // Lw = chol(W)
      double piv = at(W, j, j);
      for (int k = 0; k < j; ++k) piv -= at(Lw, j, k) * at(Lw, j, k);
      if (!(piv > 0.0)) {
        throw numeric_error("inverse-Wishart draw: Wishart factor not positive definite");
      }
      at(Lw, j, j) = std::sqrt(piv);
      for (int i = j + 1; i < d; ++i) {
        double s = at(W, i, j);
        for (int k = 0; k < j; ++k) s -= at(Lw, i, k) * at(Lw, j, k);
        at(Lw, i, j) = s / at(Lw, j, j);
      }
    }
    for (int c = 0; c < d; ++c) {          // inv = W^{-1} column by column
      double y[4];
      for (int i = 0; i < d; ++i) {
        double s = (i == c) ? 1.0 : 0.0;
        for (int k = 0; k < i; ++k) s -= at(Lw, i, k) * y[k];
        y[i] = s / at(Lw, i, i);
      }
      for (int i = d - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < d; ++k) s -= at(Lw, k, i) * inv[k * d + c];
        inv[i * d + c] = s / at(Lw, i, i);
      }
    }
    for (int i = 0; i < d; ++i) {          // symmetrize
      for (int j = 0; j < i; ++j) {
        const double v = 0.5 * (at(inv, i, j) + at(inv, j, i));
        at(inv, i, j) = v;
        at(inv, j, i) = v;
      }
    }
    for (int j = 0; j < d; ++j) {          // Ls = chol(inv)
      double piv = at(inv, j, j);
      for (int k = 0; k < j; ++k) piv -= at(Ls, j, k) * at(Ls, j, k);
      if (!(piv > 0.0)) {
        throw numeric_error("inverse-Wishart draw: result not positive definite");
      }
      at(Ls, j, j) = std::sqrt(piv);
      for (int i = j + 1; i < d; ++i) {
        double s = at(inv, i, j);
        for (int k = 0; k < j; ++k) s -= at(Ls, i, k) * at(Ls, j, k);
        at(Ls, i, j) = s / at(Ls, j, j);
      }
    }
    MatrixXd sigma(d, d), chol = MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        sigma(i, j) = at(inv, i, j);
        if (j <= i) chol(i, j) = at(Ls, i, j);
      }
    }
    return SPDMatrix::from_cholesky(std::move(sigma), std::move(chol));
  }

  double df_;
  Eigen::Index dim_;
  MatrixXd chol_scale_inv_;
};

inline SPDMatrix sample_inv_wishart(double df, const SPDMatrix& scale, RngStream& rng) {
  return InvWishartSampler(df, scale).draw(rng);
}

}  // namespace dpmg
