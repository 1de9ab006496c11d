#include <gtest/gtest.h>

#include <cmath>

#include "dpmg/scenario.hpp"

using namespace dpmg;

TEST(Simulate, MixtureMomentsMatchTheory) {
  RngStream rng(1001, 1);
  ScenarioSpec spec{ScenarioKind::mog2d, 100000, 1.0};
  const MatrixXd data = simulate_data(spec, rng);
  ASSERT_EQ(data.cols(), 2);
  // Mixture mean is 0; per-coordinate variance is 1 + 4 = 5 (between-component
  // spread plus within-component unit variance).
  for (int j = 0; j < 2; ++j) {
    const double mean = data.col(j).mean();
    const double var = (data.col(j).array() - mean).square().sum() / (data.rows() - 1.0);
    const double se = std::sqrt(var / data.rows());
    EXPECT_NEAR(mean, 0.0, 3.0 * se);
    EXPECT_NEAR(var, 5.0, 0.15);
  }
  // Off-diagonal: within-component covariance averages (0.85 + 0) / 2 plus
  // the between-component term 4.
  double cov = 0.0;
  const double m0 = data.col(0).mean(), m1 = data.col(1).mean();
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    cov += (data(i, 0) - m0) * (data(i, 1) - m1);
  }
  cov /= data.rows() - 1.0;
  EXPECT_NEAR(cov, 4.425, 0.15);
}

TEST(Simulate, StudentTHeavyTailSignature) {
  RngStream rng(1002, 2);
  ScenarioSpec spec{ScenarioKind::student_t, 100000, 1.0};
  const MatrixXd data = simulate_data(spec, rng);
  ASSERT_EQ(data.cols(), 1);
  std::vector<double> xs(data.data(), data.data() + data.rows());
  std::sort(xs.begin(), xs.end());
  const double median = xs[xs.size() / 2];
  // Median standard error for t2 is about 1/(2 f(0) sqrt(n)).
  const double f0 = std::tgamma(1.5) / (std::sqrt(2.0 * M_PI) * std::tgamma(1.0));
  const double med_se = 1.0 / (2.0 * f0 * std::sqrt(static_cast<double>(xs.size())));
  EXPECT_NEAR(median, 0.0, 3.0 * med_se);

  // Infinite-variance signature: the sample maximum grows superlinearly in n
  // on the log-log scale (roughly n^{1/2} for two degrees of freedom), so
  // max over n=1e5 should dwarf a Gaussian-scale bound and the running max
  // keeps growing.
  double max1k = 0.0, max100k = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double a = std::abs(xs[i]);
    if (i < 1000) max1k = std::max(max1k, a);
  }
  for (double x : xs) max100k = std::max(max100k, std::abs(x));
  EXPECT_GT(max100k, 5.0 * max1k * 0.1);
  EXPECT_GT(max100k, 40.0);  // a Gaussian sample of this size stays near 4.5

  // Sample variance is unstable across seeds.
  std::vector<double> vars;
  for (int seed = 0; seed < 8; ++seed) {
    RngStream r(1500 + seed, 1);
    ScenarioSpec s{ScenarioKind::student_t, 20000, 1.0};
    const MatrixXd d = simulate_data(s, r);
    const double mean = d.col(0).mean();
    vars.push_back((d.col(0).array() - mean).square().sum() / (d.rows() - 1.0));
  }
  const double vmin = *std::min_element(vars.begin(), vars.end());
  const double vmax = *std::max_element(vars.begin(), vars.end());
  EXPECT_GT(vmax / vmin, 1.5);
}

TEST(Simulate, RescaleIsExactlyLinearInC) {
  RngStream r1(7777, 3), r2(7777, 3);
  ScenarioSpec one{ScenarioKind::mog2d, 500, 1.0};
  ScenarioSpec five{ScenarioKind::mog2d, 500, 5.0};
  const MatrixXd base = simulate_data(one, r1);
  const MatrixXd scaled = simulate_data(five, r2);
  for (Eigen::Index i = 0; i < base.rows(); ++i) {
    for (int j = 0; j < 2; ++j) {
      EXPECT_DOUBLE_EQ(scaled(i, j), 5.0 * base(i, j));
    }
  }
}

TEST(Simulate, ValidatesSpec) {
  RngStream rng(1, 1);
  EXPECT_THROW(simulate_data(ScenarioSpec{ScenarioKind::mog2d, 1, 1.0}, rng),
               validation_error);
  EXPECT_THROW(simulate_data(ScenarioSpec{ScenarioKind::mog2d, 10, 0.0}, rng),
               validation_error);
  EXPECT_THROW(scenario_kind_from_string("banana"), validation_error);
}

TEST(ScenarioModel, MatchesExperimentConfigurations) {
  const ScenarioModel mog = scenario_model(ScenarioKind::mog2d);
  EXPECT_EQ(mog.pi.dim(), 2);
  EXPECT_DOUBLE_EQ(mog.pi.nu0, 4.0);
  EXPECT_TRUE(mog.pi.S0.mat().isApprox(MatrixXd::Identity(2, 2)));
  EXPECT_DOUBLE_EQ(mog.hyper.b0_df, 4.0);
  EXPECT_TRUE(mog.hyper.b0_scale.mat().isApprox(MatrixXd::Identity(2, 2) * 15.0));
  EXPECT_EQ(mog.alpha.mode, AlphaSpec::Mode::fixed);
  EXPECT_DOUBLE_EQ(mog.alpha.value, 1.0);

  // Univariate model: IG(2,1) priors expressed as 1x1 inverse-Wishart laws.
  const ScenarioModel st = scenario_model(ScenarioKind::student_t);
  EXPECT_EQ(st.pi.dim(), 1);
  EXPECT_DOUBLE_EQ(st.pi.nu0, 4.0);
  EXPECT_DOUBLE_EQ(st.pi.S0.mat()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(st.hyper.b0_df, 4.0);
  EXPECT_DOUBLE_EQ(st.hyper.b0_scale.mat()(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(st.pi.expected_sigma()(0, 0), 1.0);
}
