#include <gtest/gtest.h>

#include <cmath>

#include "dpmg/density.hpp"
#include "dpmg/scenario.hpp"
#include "support/oracles.hpp"

using namespace dpmg;

namespace {

BaseMeasure unit_pi(int d) {
  return BaseMeasure(VectorXd::Zero(d), SPDMatrix::identity(d), d + 3.0,
                     SPDMatrix::identity(d));
}

DrawSet single_draw_set(const VectorXd& mu, const MatrixXd& sigma, int n, double alpha) {
  DrawSet ds;
  ds.n = n;
  ds.d = static_cast<int>(mu.size());
  ds.config.aux_m = 3;
  ds.config.seed = 7;
  Draw dr;
  dr.iter = 1;
  dr.alpha = alpha;
  dr.K = 1;
  dr.allocations.assign(static_cast<std::size_t>(n), 0);
  dr.clusters.push_back({mu, SPDMatrix(sigma), n});
  dr.pi = unit_pi(static_cast<int>(mu.size()));
  ds.draws.push_back(std::move(dr));
  return ds;
}

// Mixture-of-normals density estimate on a 1-d grid.
DensityEstimate normal_mixture_on_grid(const Grid& grid, const std::vector<double>& weights,
                                       const std::vector<double>& means,
                                       const std::vector<double>& sds) {
  std::vector<double> values(grid.total_points(), 0.0);
  for (std::size_t p = 0; p < values.size(); ++p) {
    const double x = grid.point(p)(0);
    double v = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const double z = (x - means[k]) / sds[k];
      v += weights[k] * std::exp(-0.5 * z * z) / (sds[k] * std::sqrt(2.0 * M_PI));
    }
    values[p] = v;
  }
  return DensityEstimate(grid, std::move(values));
}

}  // namespace

TEST(Grid, ValidationAndPointCap) {
  EXPECT_THROW(Grid({{0.0, 1.0, 1}}), validation_error);
  EXPECT_THROW(Grid({{1.0, 0.0, 10}}), validation_error);
  EXPECT_THROW(Grid({{0.0, 1.0, 2000}, {0.0, 1.0, 2000}}), validation_error);
  const Grid g({{0.0, 1.0, 11}, {-1.0, 1.0, 21}});
  EXPECT_EQ(g.total_points(), 231u);
  EXPECT_NEAR(g.cell_volume(), 0.1 * 0.1, 1e-15);
  EXPECT_NEAR(g.point(0)(0), 0.0, 1e-15);
  EXPECT_NEAR(g.point(230)(1), 1.0, 1e-15);
}

TEST(PredictiveDensity, DegenerateMixtureIsTheKernel) {
  VectorXd mu(2);
  mu << 0.5, -0.25;
  MatrixXd sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 2.0;
  const DrawSet ds = single_draw_set(mu, sigma, 10, 0.0);
  const Grid grid({{-4.0, 4.0, 41}, {-4.0, 4.0, 41}});
  const DensityEstimate est = predictive_density(ds, grid);
  const SPDMatrix cov(sigma);
  for (std::size_t p = 0; p < est.values.size(); p += 17) {
    EXPECT_NEAR(est.values[p], std::exp(mvn_logpdf(grid.point(p), mu, cov)), 1e-12);
  }
}

TEST(PredictiveDensity, RelabelInvariance) {
  // Two clusters in swapped storage order, allocations adjusted to match.
  VectorXd mu1(1), mu2(1);
  mu1 << -2.0;
  mu2 << 3.0;
  const SPDMatrix s1(MatrixXd::Identity(1, 1));
  const SPDMatrix s2(MatrixXd::Identity(1, 1) * 0.5);
  DrawSet a, b;
  a.n = b.n = 5;
  a.d = b.d = 1;
  a.config.seed = b.config.seed = 11;
  Draw da, db;
  da.iter = db.iter = 1;
  da.alpha = db.alpha = 0.0;
  da.K = db.K = 2;
  da.allocations = {0, 0, 0, 1, 1};
  db.allocations = {1, 1, 1, 0, 0};
  da.clusters.push_back({mu1, s1, 3});
  da.clusters.push_back({mu2, s2, 2});
  db.clusters.push_back({mu2, s2, 2});
  db.clusters.push_back({mu1, s1, 3});
  da.pi = db.pi = unit_pi(1);
  a.draws.push_back(da);
  b.draws.push_back(db);
  const Grid grid({{-6.0, 6.0, 101}});
  const DensityEstimate ea = predictive_density(a, grid);
  const DensityEstimate eb = predictive_density(b, grid);
  for (std::size_t p = 0; p < ea.values.size(); ++p) {
    EXPECT_NEAR(ea.values[p], eb.values[p], 1e-12);
  }
}

TEST(PredictiveDensity, MassCapturedOnGenerousGrid) {
  RngStream rng(4242, 1);
  ScenarioSpec spec{ScenarioKind::mog2d, 80, 1.0};
  const MatrixXd data = simulate_data(spec, rng);
  const ScenarioModel model = scenario_model(ScenarioKind::mog2d);
  ChainConfig cfg;
  cfg.n_iter = 600;
  cfg.burn_in = 300;
  cfg.thin = 3;
  cfg.seed = 99;
  const DrawSet draws = run_chain(data, model.pi, model.hyper, model.alpha, cfg);

  // Posterior-mean within-cluster standard deviation per axis.
  VectorXd sd = VectorXd::Zero(2);
  double count = 0.0;
  for (const auto& dr : draws.draws) {
    for (const auto& c : dr.clusters) {
      for (int k = 0; k < 2; ++k) sd(k) += std::sqrt(c.sigma.mat()(k, k));
      count += 1.0;
    }
  }
  sd /= count;
  std::vector<GridAxis> axes;
  for (int k = 0; k < 2; ++k) {
    axes.push_back({data.col(k).minCoeff() - 4.0 * sd(k),
                    data.col(k).maxCoeff() + 4.0 * sd(k), 120});
  }
  const DensityEstimate est = predictive_density(draws, Grid(axes));
  EXPECT_GE(est.mass, 0.95);
  EXPECT_LE(est.mass, 1.0);
}

TEST(PredictiveDensity, RecoversTheGeneratingMixture) {
  // n = 1000 from the two-component mixture: the posterior predictive on a
  // [-6,6]^2 grid stays within L1 0.15 of the generating density.
  RngStream rng(90210, 1);
  ScenarioSpec spec{ScenarioKind::mog2d, 1000, 1.0};
  const MatrixXd data = simulate_data(spec, rng);
  const ScenarioModel model = scenario_model(ScenarioKind::mog2d);
  ChainConfig cfg;
  cfg.n_iter = 5000;
  cfg.burn_in = 2500;
  cfg.thin = 5;
  cfg.seed = 42;
  const DrawSet draws = run_chain(data, model.pi, model.hyper, model.alpha, cfg);
  const Grid grid({{-6.0, 6.0, 100}, {-6.0, 6.0, 100}});
  const DensityEstimate est = predictive_density(draws, grid);
  std::vector<double> truth(grid.total_points());
  for (std::size_t p = 0; p < truth.size(); ++p) {
    truth[p] = mog2d::true_density(grid.point(p));
  }
  const double l1 = l1_distance(est, DensityEstimate(grid, truth));
  EXPECT_LE(l1, 0.15);
}

TEST(PredictiveDensity, WorkerCountDoesNotChangeValues) {
  RngStream rng(11, 2);
  ScenarioSpec spec{ScenarioKind::mog2d, 40, 1.0};
  const MatrixXd data = simulate_data(spec, rng);
  const ScenarioModel model = scenario_model(ScenarioKind::mog2d);
  ChainConfig cfg;
  cfg.n_iter = 200;
  cfg.burn_in = 100;
  cfg.thin = 2;
  cfg.seed = 5;
  const DrawSet draws = run_chain(data, model.pi, model.hyper, model.alpha, cfg);
  const Grid grid({{-5.0, 5.0, 64}, {-5.0, 5.0, 64}});
  const DensityEstimate one = predictive_density(draws, grid, 1);
  const DensityEstimate four = predictive_density(draws, grid, 4);
  for (std::size_t p = 0; p < one.values.size(); ++p) {
    EXPECT_DOUBLE_EQ(one.values[p], four.values[p]);
  }
}

TEST(PredictiveDensity, ErrorsOnEmptyOrParameterFreeDraws) {
  EXPECT_THROW(predictive_density(DrawSet{}, Grid({{0.0, 1.0, 5}})), validation_error);
  DrawSet ds;
  ds.n = 3;
  ds.d = 1;
  Draw dr;
  dr.iter = 1;
  dr.alpha = 1.0;
  dr.K = 1;
  dr.allocations = {0, 0, 0};
  ds.draws.push_back(dr);  // no clusters, no pi
  EXPECT_THROW(predictive_density(ds, Grid({{0.0, 1.0, 5}})), validation_error);
}

TEST(Pushforward, IdentityAndScaling) {
  const Grid grid({{-3.0, 3.0, 61}});
  const DensityEstimate f = normal_mixture_on_grid(grid, {1.0}, {0.0}, {1.0});
  const DensityEstimate same = pushforward_density(f, AffineMap::identity(1));
  for (std::size_t p = 0; p < f.values.size(); ++p) {
    EXPECT_DOUBLE_EQ(same.values[p], f.values[p]);
  }
  const DensityEstimate doubled = pushforward_density(f, AffineMap::scaling(2.0, 1));
  EXPECT_NEAR(doubled.grid.axes()[0].min, -6.0, 1e-12);
  EXPECT_NEAR(doubled.grid.axes()[0].max, 6.0, 1e-12);
  for (std::size_t p = 0; p < f.values.size(); ++p) {
    EXPECT_NEAR(doubled.values[p], 0.5 * f.values[p], 1e-15);
  }
  EXPECT_NEAR(doubled.mass, f.mass, 1e-10);
}

TEST(Pushforward, RoundTripAndMassPreservation) {
  const Grid grid({{-4.0, 6.0, 101}});
  const DensityEstimate f = normal_mixture_on_grid(grid, {0.6, 0.4}, {0.0, 2.5}, {1.0, 0.7});
  VectorXd scales(1), offset(1);
  scales << 0.37;
  offset << 1.9;
  const AffineMap g = AffineMap::diagonal(scales, offset);
  const DensityEstimate fwd = pushforward_density(f, g);
  EXPECT_NEAR(fwd.mass, f.mass, 1e-10);
  const DensityEstimate back = pushforward_density(fwd, g.inverse());
  ASSERT_TRUE(back.grid.same_geometry(f.grid));
  for (std::size_t p = 0; p < f.values.size(); ++p) {
    EXPECT_NEAR(back.values[p], f.values[p], 1e-10 * (1.0 + f.values[p]));
  }
}

TEST(Pushforward, NegativeScaleFlipsAxis) {
  const Grid grid({{-1.0, 2.0, 31}});
  const DensityEstimate f = normal_mixture_on_grid(grid, {1.0}, {0.5}, {0.4});
  VectorXd scales(1), offset(1);
  scales << -1.0;
  offset << 0.0;
  const AffineMap g = AffineMap::diagonal(scales, offset);
  const DensityEstimate flipped = pushforward_density(f, g);
  EXPECT_NEAR(flipped.grid.axes()[0].min, -2.0, 1e-12);
  EXPECT_NEAR(flipped.grid.axes()[0].max, 1.0, 1e-12);
  for (std::size_t p = 0; p < f.values.size(); ++p) {
    EXPECT_DOUBLE_EQ(flipped.values[p], f.values[f.values.size() - 1 - p]);
  }
  EXPECT_NEAR(flipped.mass, f.mass, 1e-12);
}

TEST(Pushforward, RejectsNonDiagonal) {
  MatrixXd C(2, 2);
  C << 1.0, 0.2, 0.0, 1.0;
  const AffineMap g(C, VectorXd::Zero(2));
  const Grid grid({{-1.0, 1.0, 5}, {-1.0, 1.0, 5}});
  std::vector<double> vals(25, 0.01);
  const DensityEstimate f(grid, vals);
  EXPECT_THROW(pushforward_density(f, g), validation_error);
}

TEST(L1Distance, IdenticalDisjointAndGridMismatch) {
  const Grid grid({{-5.0, 5.0, 201}});
  const DensityEstimate f = normal_mixture_on_grid(grid, {1.0}, {0.0}, {1.0});
  EXPECT_DOUBLE_EQ(l1_distance(f, f), 0.0);

  // Unit masses with disjoint support on a shared grid.
  std::vector<double> a(grid.total_points(), 0.0), b(grid.total_points(), 0.0);
  const double cell = grid.cell_volume();
  a[10] = 1.0 / cell;
  b[150] = 1.0 / cell;
  EXPECT_NEAR(l1_distance(DensityEstimate(grid, a), DensityEstimate(grid, b)), 2.0, 1e-12);

  const Grid other({{-5.0, 5.0, 200}});
  const DensityEstimate g2 = normal_mixture_on_grid(other, {1.0}, {0.0}, {1.0});
  EXPECT_THROW(l1_distance(f, g2), validation_error);
}

TEST(L1Distance, ClosedFormNormalPair) {
  // N(0,1) vs N(0,4): crossing points at +/- sqrt(8 ln 2 / 3).
  const double xstar = std::sqrt(8.0 * std::log(2.0) / 3.0);
  const double exact = 4.0 * (oracle::normal_cdf(xstar) - oracle::normal_cdf(xstar / 2.0));
  EXPECT_NEAR(exact, 0.6451, 5e-4);
  const Grid grid({{-14.0, 14.0, 1401}});
  const DensityEstimate f1 = normal_mixture_on_grid(grid, {1.0}, {0.0}, {1.0});
  const DensityEstimate f2 = normal_mixture_on_grid(grid, {1.0}, {0.0}, {2.0});
  EXPECT_NEAR(l1_distance(f1, f2), exact, 5e-3);
  EXPECT_NEAR(l1_distance(f1, f2), 0.645, 5e-3);

  // Grid refinement changes the value by under 1%.
  const Grid fine({{-14.0, 14.0, 2801}});
  const double coarse_val = l1_distance(f1, f2);
  const double fine_val = l1_distance(normal_mixture_on_grid(fine, {1.0}, {0.0}, {1.0}),
                                      normal_mixture_on_grid(fine, {1.0}, {0.0}, {2.0}));
  EXPECT_LE(std::abs(fine_val - coarse_val) / fine_val, 0.01);
}

TEST(Hellinger, ClosedFormAndBounds) {
  const Grid grid({{-10.0, 11.0, 2101}});
  const DensityEstimate f1 = normal_mixture_on_grid(grid, {1.0}, {0.0}, {1.0});
  const DensityEstimate f2 = normal_mixture_on_grid(grid, {1.0}, {1.0}, {1.0});
  EXPECT_DOUBLE_EQ(hellinger(f1, f1), 0.0);
  const double exact = std::sqrt(2.0 * (1.0 - std::exp(-1.0 / 8.0)));
  EXPECT_NEAR(exact, 0.48475, 2e-3);
  EXPECT_NEAR(hellinger(f1, f2), exact, 2e-3);
  EXPECT_NEAR(hellinger(f1, f2), 0.48475, 2e-3);
}

TEST(Metrics, RandomPairsRespectBoundsAndTriangle) {
  RngStream rng(31337, 3);
  const Grid grid({{-12.0, 12.0, 601}});
  auto random_density = [&]() {
    const int k = 1 + static_cast<int>(rng.uniform01() * 3);
    std::vector<double> w, m, s;
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      w.push_back(0.1 + rng.uniform01());
      total += w.back();
      m.push_back(8.0 * (rng.uniform01() - 0.5));
      s.push_back(0.3 + 2.0 * rng.uniform01());
    }
    for (auto& x : w) x /= total;
    return normal_mixture_on_grid(grid, w, m, s);
  };
  for (int rep = 0; rep < 50; ++rep) {
    const DensityEstimate a = random_density();
    const DensityEstimate b = random_density();
    const DensityEstimate c = random_density();
    const double lab = l1_distance(a, b);
    EXPECT_LE(lab, 2.0 + 1e-9);
    EXPECT_DOUBLE_EQ(lab, l1_distance(b, a));
    EXPECT_LE(lab, l1_distance(a, c) + l1_distance(c, b) + 1e-10);
    const double hab = hellinger(a, b);
    EXPECT_LE(hab, std::sqrt(2.0) + 1e-9);
    EXPECT_DOUBLE_EQ(hab, hellinger(b, a));
    EXPECT_LE(hab, hellinger(a, c) + hellinger(c, b) + 1e-10);
    // Hellinger-L1 relation: H^2 <= L1 under these conventions.
    EXPECT_LE(hab * hab, lab + 1e-9);
  }
}

TEST(CompareRescaled, IdenticalRunsGiveZeroAndSymmetry) {
  VectorXd mu(1);
  mu << 0.4;
  const DrawSet ds = single_draw_set(mu, MatrixXd::Identity(1, 1), 20, 0.0);
  const AffineMap g = AffineMap::scaling(2.0, 1);
  const Grid grid({{-5.0, 5.0, 201}});
  EXPECT_DOUBLE_EQ(compare_rescaled(ds, ds, g, g, grid), 0.0);

  VectorXd mu2(1);
  mu2 << -0.3;
  const DrawSet other = single_draw_set(mu2, MatrixXd::Identity(1, 1) * 1.3, 20, 0.0);
  const AffineMap h = AffineMap::scaling(0.5, 1);
  const double ab = compare_rescaled(ds, other, g, h, grid);
  const double ba = compare_rescaled(other, ds, h, g, grid);
  EXPECT_DOUBLE_EQ(ab, ba);
  EXPECT_GT(ab, 0.0);
}

TEST(PulledBackL1, AgreesWithCompareRescaledOnDiagonalMaps) {
  RngStream rng(808, 4);
  ScenarioSpec spec{ScenarioKind::mog2d, 50, 1.0};
  const MatrixXd data = simulate_data(spec, rng);
  const ScenarioModel model = scenario_model(ScenarioKind::mog2d);
  ChainConfig cfg{400, 200, 4, 3, 17, true};
  const DrawSet a = run_chain(data, model.pi, model.hyper, model.alpha, cfg);
  ChainConfig cfg_b = cfg;
  cfg_b.seed = 18;
  const AffineMap g = AffineMap::scaling(2.0, 2);
  const DrawSet b = run_chain(g.apply_data(data), map_base_measure(model.pi, g), model.hyper,
                              model.alpha, cfg_b);
  const Grid grid = Grid::from_data(data, 0.25, 60);
  const double via_pushforward = compare_rescaled(a, b, AffineMap::identity(2), g, grid);
  const double via_points = l1_between_pulled_back(a, b, AffineMap::identity(2), g, grid);
  EXPECT_NEAR(via_pushforward, via_points, 1e-8 * (1.0 + via_pushforward));
}

TEST(NormalizedDistanceMatrix, ContractsAndFlags) {
  const Grid grid({{-6.0, 6.0, 301}});
  const DensityEstimate f = normal_mixture_on_grid(grid, {1.0}, {0.0}, {1.0});
  {
    const auto res = normalized_distance_matrix({f}, {AffineMap::identity(1)});
    EXPECT_EQ(res.normalized.rows(), 1);
    EXPECT_DOUBLE_EQ(res.normalized(0, 0), 0.0);
    EXPECT_TRUE(res.all_zero);
  }
  {
    const auto res = normalized_distance_matrix({f, f}, {AffineMap::identity(1),
                                                         AffineMap::identity(1)});
    EXPECT_TRUE(res.all_zero);
    EXPECT_DOUBLE_EQ(res.normalized.maxCoeff(), 0.0);
  }
  {
    const DensityEstimate g = normal_mixture_on_grid(grid, {1.0}, {2.0}, {0.8});
    const DensityEstimate h = normal_mixture_on_grid(grid, {1.0}, {-1.0}, {1.4});
    const auto res = normalized_distance_matrix(
        {f, g, h},
        {AffineMap::identity(1), AffineMap::identity(1), AffineMap::identity(1)});
    EXPECT_FALSE(res.all_zero);
    EXPECT_DOUBLE_EQ(res.normalized.maxCoeff(), 1.0);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(res.normalized(i, i), 0.0);
    EXPECT_TRUE(res.normalized.isApprox(res.normalized.transpose()));
  }
}
