#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "dpmg/clustering.hpp"
#include "dpmg/io.hpp"

namespace dpmg {

// Full analysis of a numeric dataset: component-wise standardization,
// robustness-condition report, hyperprior DPM fit, and partition summaries.
//
// Defaults (overridable through RunConfig): nu0 is the smallest value
// satisfying both nu0 > d + 1 and nu0 > (d+1)(2d-3); S0 = (nu0 - d - 1) I so
// the prior expected covariance is the identity on the standardized scale;
// B0 ~ IW(6, diag(15)) with m0 | B0 ~ N(0, B0); alpha ~ Gamma(1, 5.26);
// 20000 iterations with a 5000 burn-in.
struct AnalyzeOptions {
  RunConfig config;
  bool sampler_specified = false;
  bool alpha_specified = false;
  double level = 0.95;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct AnalyzeResult {
  AffineMap standardization;
  RobustnessReport robustness;
  BaseMeasure pi;
  HyperPriorSpec hyperprior;
  AlphaSpec alpha;
  ChainConfig chain;
  DrawSet draws;
  PSM similarity;
  Partition optimal;
  CredibleBall ball;
  std::optional<ConfusionMatrix> confusion;
  double alpha_prior_mean = 0.0;
  double prior_expected_clusters = 0.0;
};

inline AnalyzeResult analyze(const MatrixXd& data,
                             const std::optional<std::vector<std::int32_t>>& reference_labels,
                             const AnalyzeOptions& opts) {
  const int d = static_cast<int>(data.cols());
  auto std_result = standardize(data);

  BaseMeasure pi = [&]() {
    if (opts.config.base_measure) return *opts.config.base_measure;
    const double nu0 = RunConfig::default_nu0(d);
    return BaseMeasure(VectorXd::Zero(d), SPDMatrix(MatrixXd::Identity(d, d) * 15.0), nu0,
                       SPDMatrix(MatrixXd::Identity(d, d) *
                                 (nu0 - static_cast<double>(d) - 1.0)));
  }();
  const RobustnessReport report = check_robustness_condition(pi, d);

  HyperPriorSpec hyper = opts.config.hyperprior
                             ? *opts.config.hyperprior
                             : HyperPriorSpec(6.0, SPDMatrix(MatrixXd::Identity(d, d) * 15.0),
                                              VectorXd::Zero(d));
  AlphaSpec alpha =
      opts.alpha_specified ? opts.config.alpha : AlphaSpec::gamma_prior(1.0, 5.26);

  ChainConfig chain = opts.config.sampler;
  if (!opts.sampler_specified) {
    chain.n_iter = 20000;
    chain.burn_in = 5000;
    chain.thin = 1;
  }
  chain.seed = opts.seed;

  AnalyzeResult res{
      std_result.map,
      report,
      pi,
      hyper,
      alpha,
      chain,
      run_chain(std_result.data, pi, hyper, alpha, chain),
      PSM(MatrixXd::Identity(1, 1)),
      Partition::all_together(static_cast<std::size_t>(data.rows())),
      CredibleBall{Partition::all_together(1), 0.0, opts.level, Partition::all_together(1),
                   Partition::all_together(1), Partition::all_together(1)},
      std::nullopt,
      0.0,
      0.0};
  res.similarity = psm(res.draws);
  res.optimal = optimal_partition(res.draws, res.similarity);
  res.ball = credible_ball(res.draws, res.optimal, opts.level);
  if (reference_labels) {
    res.confusion = confusion_matrix(res.optimal, *reference_labels);
  }
  res.alpha_prior_mean =
      alpha.mode == AlphaSpec::Mode::gamma ? alpha.shape / alpha.rate : alpha.value;
  res.prior_expected_clusters =
      expected_clusters(res.alpha_prior_mean, static_cast<int>(data.rows()));
  return res;
}

}  // namespace dpmg
