#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "dpmg/affine.hpp"
#include "dpmg/linalg.hpp"

namespace dpmg {

// Hyperparameters of the mixture base measure: mu ~ N(m0, B0) independent of
// sigma ~ IW(nu0, S0). nu0 > d + 1 so that E[sigma] = S0 / (nu0 - d - 1)
// exists.
struct BaseMeasure {
  VectorXd m0;
  SPDMatrix B0;
  double nu0;
  SPDMatrix S0;

  BaseMeasure(VectorXd m0_in, SPDMatrix B0_in, double nu0_in, SPDMatrix S0_in)
      : m0(std::move(m0_in)), B0(std::move(B0_in)), nu0(nu0_in), S0(std::move(S0_in)) {
    const Eigen::Index d = m0.size();
    if (B0.dim() != d || S0.dim() != d) {
      throw validation_error("BaseMeasure: inconsistent dimensions");
    }
    if (!(nu0 > static_cast<double>(d) + 1.0)) {
      throw validation_error("BaseMeasure: nu0 must exceed d + 1");
    }
  }

  Eigen::Index dim() const { return m0.size(); }

  MatrixXd expected_sigma() const {
    return S0.mat() / (nu0 - static_cast<double>(dim()) - 1.0);
  }
};

// Normal/inverse-Wishart hyperprior for (m0, B0):
// B0 ~ IW(b0_df, b0_scale), m0 | B0 ~ N(m0_mean, B0 / kappa0).
struct HyperPriorSpec {
  double b0_df;
  SPDMatrix b0_scale;
  VectorXd m0_mean;
  double kappa0 = 1.0;
  bool m0_cov_is_b0 = true;

  HyperPriorSpec(double df, SPDMatrix scale, VectorXd mean, double kappa = 1.0,
                 bool cov_is_b0 = true)
      : b0_df(df), b0_scale(std::move(scale)), m0_mean(std::move(mean)), kappa0(kappa),
        m0_cov_is_b0(cov_is_b0) {
    const Eigen::Index d = m0_mean.size();
    if (b0_scale.dim() != d) throw validation_error("HyperPriorSpec: dimension mismatch");
    if (!(b0_df > static_cast<double>(d) + 1.0)) {
      throw validation_error("HyperPriorSpec: b0_df must exceed d + 1");
    }
    if (!(kappa0 > 0.0)) throw validation_error("HyperPriorSpec: kappa0 must be positive");
    if (!m0_cov_is_b0) {
      throw validation_error(
          "HyperPriorSpec: only the m0 | B0 ~ N(m0_mean, B0/kappa0) structure is supported");
    }
  }

  Eigen::Index dim() const { return m0_mean.size(); }
};

// Concentration parameter: fixed value or gamma-prior (shape, rate).
struct AlphaSpec {
  enum class Mode { fixed, gamma };
  Mode mode = Mode::fixed;
  double value = 1.0;
  double shape = 1.0;
  double rate = 1.0;

  static AlphaSpec fixed(double v) {
    if (!(v >= 0.0)) throw validation_error("AlphaSpec: fixed alpha must be >= 0");
    AlphaSpec s;
    s.mode = Mode::fixed;
    s.value = v;
    return s;
  }

  static AlphaSpec gamma_prior(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0)) {
      throw validation_error("AlphaSpec: gamma shape and rate must be positive");
    }
    AlphaSpec s;
    s.mode = Mode::gamma;
    s.shape = shape;
    s.rate = rate;
    return s;
  }

  double initial_value() const {
    return mode == Mode::fixed ? value : shape / rate;
  }
};

// Pushforward of the base-measure hyperparameters under g(x) = Cx + b:
// (C m0 + b, C B0 C^T, nu0, C S0 C^T).
inline BaseMeasure map_base_measure(const BaseMeasure& pi, const AffineMap& g) {
  if (g.dim() != pi.dim()) throw validation_error("map_base_measure: dimension mismatch");
  const MatrixXd& C = g.C();
  MatrixXd B = C * pi.B0.mat() * C.transpose();
  MatrixXd S = C * pi.S0.mat() * C.transpose();
  B = 0.5 * (B + B.transpose()).eval();
  S = 0.5 * (S + S.transpose()).eval();
  return BaseMeasure(g.apply(pi.m0), SPDMatrix(B), pi.nu0, SPDMatrix(S));
}

inline VectorXd sample_mean(const MatrixXd& data) { return data.colwise().mean(); }

// Unbiased sample covariance (n - 1 denominator).
inline MatrixXd sample_covariance(const MatrixXd& data) {
  const Eigen::Index n = data.rows();
  if (n < 2) throw validation_error("sample_covariance: need at least two rows");
  MatrixXd centered = data.rowwise() - data.colwise().mean();
  MatrixXd S = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return 0.5 * (S + S.transpose()).eval();
}

// Data-driven hyperparameters: m0 = sample mean, B0 = S_X^2 / gamma1,
// S0 = (nu0 - d - 1) S_X^2 / gamma2.
inline BaseMeasure empirical_bayes(const MatrixXd& data, double gamma1, double gamma2,
                                   double nu0) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) throw validation_error("empirical_bayes: need at least two observations");
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) {
    throw validation_error("empirical_bayes: gamma1 and gamma2 must be positive");
  }
  if (!(nu0 > static_cast<double>(d) + 1.0)) {
    throw validation_error("empirical_bayes: nu0 must exceed d + 1");
  }
  const MatrixXd S = sample_covariance(data);
  try {
    SPDMatrix B0(S / gamma1);
    SPDMatrix S0((nu0 - static_cast<double>(d) - 1.0) / gamma2 * S);
    return BaseMeasure(sample_mean(data), std::move(B0), nu0, std::move(S0));
  } catch (const numeric_error&) {
    throw validation_error(
        "empirical_bayes: degenerate data, sample covariance is singular "
        "(constant column or n <= d)");
  }
}

struct RobustnessReport {
  bool satisfied;
  double threshold;
  std::string message;
};

// nu0 must exceed (d + 1)(2d - 3) for the large-sample robustness guarantee.
inline RobustnessReport check_robustness_condition(const BaseMeasure& pi, int d) {
  const double threshold = (static_cast<double>(d) + 1.0) * (2.0 * d - 3.0);
  const bool ok = pi.nu0 > threshold;
  std::string msg = "nu0 = " + std::to_string(pi.nu0) + (ok ? " > " : " <= ") +
                    std::to_string(threshold) + " = (d+1)(2d-3) for d = " +
                    std::to_string(d) + ": condition " + (ok ? "satisfied" : "violated");
  return {ok, threshold, msg};
}

// Prior expected number of clusters in a sample of size n:
// sum_{i=1}^n alpha / (alpha + i - 1).
inline double expected_clusters(double alpha, int n) {
  if (!(alpha > 0.0)) throw validation_error("expected_clusters: alpha must be positive");
  if (n < 1) throw validation_error("expected_clusters: n must be >= 1");
  double s = 0.0;
  for (int i = 1; i <= n; ++i) s += alpha / (alpha + static_cast<double>(i) - 1.0);
  return s;
}

}  // namespace dpmg
