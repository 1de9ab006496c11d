#include <gtest/gtest.h>

#include <cmath>

#include "dpmg/clustering.hpp"
#include "dpmg/scenario.hpp"

using namespace dpmg;

namespace {

DrawSet drawset_from_labels(const std::vector<std::vector<std::int32_t>>& labels) {
  DrawSet ds;
  ds.n = static_cast<int>(labels.front().size());
  ds.d = 1;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    Draw dr;
    dr.iter = static_cast<int>(t + 1);
    dr.alpha = 1.0;
    dr.allocations = labels[t];
    std::int32_t mx = 0;
    for (auto l : labels[t]) mx = std::max(mx, l);
    dr.K = mx + 1;
    ds.draws.push_back(std::move(dr));
  }
  return ds;
}

std::vector<std::int32_t> perturb(const std::vector<std::int32_t>& base, double prob,
                                  int n_blocks, RngStream& rng) {
  std::vector<std::int32_t> out = base;
  for (auto& l : out) {
    if (rng.uniform01() < prob) {
      l = static_cast<std::int32_t>(rng.uniform01() * n_blocks);
    }
  }
  return out;
}

}  // namespace

TEST(Psm, PointMassAndTwoDrawCases) {
  const std::vector<std::int32_t> a{0, 0, 1};
  {
    const PSM p = psm(drawset_from_labels({a, a, a}));
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = 0; j < 3; ++j) {
        EXPECT_TRUE(p.m(i, j) == 0.0 || p.m(i, j) == 1.0);
      }
    }
    EXPECT_DOUBLE_EQ(p.m(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(p.m(0, 2), 0.0);
  }
  {
    const PSM p = psm(drawset_from_labels({{0, 0, 1}, {0, 1, 1}}));
    EXPECT_DOUBLE_EQ(p.m(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(p.m(1, 2), 0.5);
    EXPECT_DOUBLE_EQ(p.m(0, 2), 0.0);
    EXPECT_DOUBLE_EQ(p.m(0, 0), 1.0);
  }
  EXPECT_THROW(psm(DrawSet{}), validation_error);
}

TEST(Psm, LabelPermutationInvarianceAndRecompute) {
  RngStream rng(314, 1);
  const std::vector<std::int32_t> base{0, 0, 0, 1, 1, 2, 2, 2, 2, 1};
  std::vector<std::vector<std::int32_t>> draws, relabeled;
  for (int t = 0; t < 40; ++t) {
    auto d = perturb(base, 0.2, 3, rng);
    draws.push_back(d);
    for (auto& l : d) l = (l + 1 + static_cast<std::int32_t>(t) % 3) % 5 + 7;
    relabeled.push_back(d);
  }
  // Relabeling within draws must not change co-clustering; note the relabel
  // map above is injective on the used labels.
  const PSM p1 = psm(drawset_from_labels(draws));
  const PSM p2 = psm(drawset_from_labels(relabeled));
  EXPECT_LE((p1.m - p2.m).cwiseAbs().maxCoeff(), 0.0);

  // Independent recomputation from indicators.
  const auto n = base.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (const auto& d : draws) acc += d[i] == d[j] ? 1.0 : 0.0;
      acc /= static_cast<double>(draws.size());
      EXPECT_NEAR(p1.m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), acc,
                  1e-12);
    }
  }
}

TEST(ExpectedViBound, PointMassAndSingletonCases) {
  const std::vector<std::int32_t> together(6, 0);
  const DrawSet point_mass = drawset_from_labels({together, together});
  const PSM p = psm(point_mass);
  EXPECT_NEAR(expected_vi_bound(Partition(together), p), 0.0, 1e-12);
  EXPECT_NEAR(expected_vi_bound(Partition::all_singletons(6), p), std::log(6.0), 1e-12);
}

TEST(ExpectedViBound, JensenBoundAgainstExactAverage) {
  // Concentrated draw sets of the kind the sampler produces: the surrogate
  // stays below the exact posterior-mean VI of sampled candidates.
  RngStream rng(2718, 2);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = 30;
    std::vector<std::int32_t> base(n);
    for (int i = 0; i < n; ++i) base[static_cast<std::size_t>(i)] = i % 3;
    std::vector<std::vector<std::int32_t>> labels;
    for (int t = 0; t < 60; ++t) labels.push_back(perturb(base, 0.08, 3, rng));
    const DrawSet ds = drawset_from_labels(labels);
    const PSM p = psm(ds);
    const auto cand_idx = static_cast<std::size_t>(rng.uniform01() * labels.size());
    const Partition cand(labels[cand_idx]);
    double exact = 0.0;
    for (const auto& l : labels) exact += vi(cand, Partition(l));
    exact /= static_cast<double>(labels.size());
    EXPECT_LE(expected_vi_bound(cand, p), exact + 1e-12);
  }
}

TEST(OptimalPartition, PointMassRecoversThePartition) {
  const std::vector<std::int32_t> truth{0, 0, 1, 1, 2, 0};
  const DrawSet ds = drawset_from_labels({truth, truth, truth});
  const Partition opt = optimal_partition(ds, psm(ds));
  EXPECT_TRUE(opt == Partition(truth));
}

TEST(OptimalPartition, RecoversWellSeparatedClusters) {
  // Two widely separated Gaussian clusters; the VI-optimal partition should
  // match the generating labels in at least 9 of 10 seeds.
  int hits = 0;
  for (int seed = 0; seed < 10; ++seed) {
    const int n = 100;
    RngStream rng(5000 + seed, 3);
    MatrixXd data(n, 2);
    std::vector<std::int32_t> truth(n);
    for (int i = 0; i < n; ++i) {
      const bool first = i < n / 2;
      truth[static_cast<std::size_t>(i)] = first ? 0 : 1;
      const VectorXd mu = first ? (Eigen::Vector2d() << -4.0, -4.0).finished()
                                : (Eigen::Vector2d() << 4.0, 4.0).finished();
      const SPDMatrix& cov = first ? mog2d::cov1() : mog2d::cov2();
      data.row(i) = sample_mvn(mu, cov, rng).transpose();
    }
    const ScenarioModel model = scenario_model(ScenarioKind::mog2d);
    ChainConfig cfg;
    cfg.n_iter = 2000;
    cfg.burn_in = 1000;
    cfg.thin = 2;
    cfg.seed = 777 + static_cast<std::uint64_t>(seed);
    const DrawSet draws = run_chain(data, model.pi, model.hyper, model.alpha, cfg);
    const Partition opt = optimal_partition(draws, psm(draws));
    if (vi(opt, Partition(truth)) == 0.0) ++hits;
  }
  EXPECT_GE(hits, 9);
}

TEST(CredibleBall, PointMassShrinksToCenter) {
  const std::vector<std::int32_t> truth{0, 1, 1, 0, 2};
  const DrawSet ds = drawset_from_labels({truth, truth, truth, truth});
  const Partition center(truth);
  const CredibleBall ball = credible_ball(ds, center);
  EXPECT_DOUBLE_EQ(ball.radius, 0.0);
  EXPECT_TRUE(ball.vertical_lower == center);
  EXPECT_TRUE(ball.vertical_upper == center);
  EXPECT_TRUE(ball.horizontal == center);
}

TEST(CredibleBall, BlockCountSandwichAndMonotoneRadius) {
  RngStream rng(1618, 4);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 24;
    std::vector<std::int32_t> base(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) base[static_cast<std::size_t>(i)] = i % 4;
    std::vector<std::vector<std::int32_t>> labels;
    for (int t = 0; t < 80; ++t) labels.push_back(perturb(base, 0.15, 5, rng));
    const DrawSet ds = drawset_from_labels(labels);
    const Partition center(labels[0]);  // a sampled partition
    const CredibleBall ball = credible_ball(ds, center, 0.95);
    EXPECT_GE(ball.vertical_lower.n_blocks(), center.n_blocks());
    EXPECT_LE(ball.vertical_upper.n_blocks(), center.n_blocks());
    EXPECT_LE(vi(ball.vertical_lower, center), ball.radius + 1e-12);
    EXPECT_LE(vi(ball.vertical_upper, center), ball.radius + 1e-12);
    EXPECT_LE(vi(ball.horizontal, center), ball.radius + 1e-12);

    double prev = -1.0;
    for (double level : {0.5, 0.8, 0.95}) {
      const double r = credible_ball(ds, center, level).radius;
      EXPECT_GE(r, prev);
      prev = r;
    }
  }
}

TEST(CredibleBall, RejectsBadLevelAndEmptyDraws) {
  const DrawSet ds = drawset_from_labels({{0, 0, 1}});
  EXPECT_THROW(credible_ball(ds, Partition::all_together(3), 0.0), validation_error);
  EXPECT_THROW(credible_ball(DrawSet{}, Partition::all_together(3), 0.9), validation_error);
}

TEST(AverageLinkage, CutsCoverAllBlockCounts) {
  RngStream rng(42, 5);
  const int n = 12;
  std::vector<std::int32_t> base(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) base[static_cast<std::size_t>(i)] = i % 2;
  std::vector<std::vector<std::int32_t>> labels;
  for (int t = 0; t < 30; ++t) labels.push_back(perturb(base, 0.1, 2, rng));
  const PSM p = psm(drawset_from_labels(labels));
  const auto cuts = average_linkage_cuts(p);
  ASSERT_EQ(cuts.size(), static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    EXPECT_EQ(cuts[static_cast<std::size_t>(k)].n_blocks(), n - k);
  }
}
