#pragma once

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>
#include <vector>

#include "dpmg/grid.hpp"
#include "dpmg/sampler.hpp"

namespace dpmg {

struct DensityEstimate {
  Grid grid;
  std::vector<double> values;
  double mass = 0.0;

  DensityEstimate(Grid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid.total_points()) {
      throw validation_error("DensityEstimate: value count does not match grid");
    }
    for (double x : values) {
      if (!(x >= 0.0)) throw validation_error("DensityEstimate: negative or NaN value");
    }
    double s = 0.0;
    for (double x : values) s += x;
    mass = s * grid.cell_volume();
  }
};

namespace detail {

struct EvalComponent {
  double log_weight_const;  // log weight - 0.5 (d log 2pi + log det)
  VectorXd mu;
  MatrixXd chol;
};

inline void build_components(const DrawSet& draws, std::vector<EvalComponent>& comps) {
  if (draws.draws.empty()) throw validation_error("predictive_density: empty draw set");
  const double n = static_cast<double>(draws.n);
  const int aux_m = draws.config.aux_m;
  const double t = static_cast<double>(draws.draws.size());
  RngStream rng(draws.config.seed, kDensityStream);
  const auto& first = draws.draws.front();
  if (first.clusters.empty() || !first.pi) {
    throw validation_error("predictive_density: draw set lacks recorded parameters");
  }
  // nu0 and S0 are constant along a chain, so one sampler serves every draw.
  InvWishartSampler prior_sigma(first.pi->nu0, first.pi->S0);
  const double d = static_cast<double>(first.pi->dim());
  auto log_const = [&](const SPDMatrix& sigma) {
    return -0.5 * (d * kLogTwoPi + sigma.log_det());
  };
  for (const auto& dr : draws.draws) {
    if (dr.clusters.empty() || !dr.pi) {
      throw validation_error("predictive_density: draw set lacks recorded parameters");
    }
    const double denom = (n + dr.alpha) * t;
    for (const auto& c : dr.clusters) {
      comps.push_back({std::log(static_cast<double>(c.size) / denom) + log_const(c.sigma),
                       c.mu, c.sigma.chol_lower()});
    }
    if (dr.alpha > 0.0) {
      const double w_new = dr.alpha / (denom * static_cast<double>(aux_m));
      for (int a = 0; a < aux_m; ++a) {
        VectorXd mu = sample_mvn(dr.pi->m0, dr.pi->B0, rng);
        SPDMatrix sigma = prior_sigma.draw(rng);
        comps.push_back({std::log(w_new) + log_const(sigma), std::move(mu),
                         sigma.chol_lower()});
      }
    }
  }
}

inline double eval_point(const VectorXd& x, const std::vector<EvalComponent>& comps) {
  const Eigen::Index d = x.size();
  double total = 0.0;
  double r[8];
  for (const auto& c : comps) {
    double q = 0.0;
    if (d <= 8) {
      for (Eigen::Index i = 0; i < d; ++i) r[i] = x(i) - c.mu(i);
      for (Eigen::Index i = 0; i < d; ++i) {
        double s = r[i];
        for (Eigen::Index k = 0; k < i; ++k) s -= c.chol(i, k) * r[k];
        s /= c.chol(i, i);
        r[i] = s;
        q += s * s;
      }
    } else {
      q = forward_solve(c.chol, x - c.mu).squaredNorm();
    }
    total += std::exp(c.log_weight_const - 0.5 * q);
  }
  return total;
}

}  // namespace detail

// Rao-Blackwellized posterior predictive on a grid: per retained draw the
// cluster mixture n_j/(n+alpha) plus a fresh-component term alpha/(n+alpha)
// approximated by aux_m base-measure draws. Deterministic for any worker
// count: every grid point is evaluated by exactly one thread with a fixed
// component order.
inline DensityEstimate predictive_density(const DrawSet& draws, const Grid& grid,
                                          int workers = 1) {
  std::vector<detail::EvalComponent> comps;
  detail::build_components(draws, comps);
  if (static_cast<std::size_t>(draws.d) != grid.dim()) {
    throw validation_error("predictive_density: grid dimension mismatch");
  }
  const std::size_t npts = grid.total_points();
  std::vector<double> values(npts, 0.0);
  const int w = std::max(1, workers);
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      values[p] = detail::eval_point(grid.point(p), comps);
    }
  };
  if (w == 1 || npts < 1024) {
    work(0, npts);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (npts + static_cast<std::size_t>(w) - 1) / static_cast<std::size_t>(w);
    for (int t = 0; t < w; ++t) {
      const std::size_t lo = std::min(npts, static_cast<std::size_t>(t) * chunk);
      const std::size_t hi = std::min(npts, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return DensityEstimate(grid, std::move(values));
}

// Predictive evaluated at scattered points (rows of `points`), for uses a
// rectangular grid cannot serve, e.g. pulling back through a non-diagonal
// map.
inline std::vector<double> predictive_density_at_points(const DrawSet& draws,
                                                        const MatrixXd& points,
                                                        int workers = 1) {
  std::vector<detail::EvalComponent> comps;
  detail::build_components(draws, comps);
  if (points.cols() != draws.d) {
    throw validation_error("predictive_density_at_points: dimension mismatch");
  }
  const auto npts = static_cast<std::size_t>(points.rows());
  std::vector<double> values(npts, 0.0);
  const int w = std::max(1, workers);
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo; p < hi; ++p) {
      values[p] = detail::eval_point(points.row(static_cast<Eigen::Index>(p)).transpose(),
                                     comps);
    }
  };
  if (w == 1 || npts < 1024) {
    work(0, npts);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (npts + static_cast<std::size_t>(w) - 1) / static_cast<std::size_t>(w);
    for (int t = 0; t < w; ++t) {
      const std::size_t lo = std::min(npts, static_cast<std::size_t>(t) * chunk);
      const std::size_t hi = std::min(npts, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return values;
}

// L1 distance between two fits pulled back to the common original scale,
// valid for any invertible maps: the second predictive is evaluated at the
// mapped grid points and rescaled by the change-of-variables factor.
inline double l1_between_pulled_back(const DrawSet& draws_a, const DrawSet& draws_b,
                                     const AffineMap& g_a, const AffineMap& g_b,
                                     const Grid& grid, int workers = 1) {
  const auto npts = grid.total_points();
  MatrixXd pts_a(static_cast<Eigen::Index>(npts), static_cast<Eigen::Index>(grid.dim()));
  MatrixXd pts_b = pts_a;
  for (std::size_t p = 0; p < npts; ++p) {
    const VectorXd x = grid.point(p);
    pts_a.row(static_cast<Eigen::Index>(p)) = g_a.apply(x).transpose();
    pts_b.row(static_cast<Eigen::Index>(p)) = g_b.apply(x).transpose();
  }
  const std::vector<double> fa = predictive_density_at_points(draws_a, pts_a, workers);
  const std::vector<double> fb = predictive_density_at_points(draws_b, pts_b, workers);
  const double da = g_a.abs_det();
  const double db = g_b.abs_det();
  double s = 0.0;
  for (std::size_t p = 0; p < npts; ++p) {
    s += std::abs(fa[p] * da - fb[p] * db);
  }
  return s * grid.cell_volume();
}

// Image of a rectangular grid under a diagonal affine map; axes with a
// negative scale are re-sorted ascending.
inline Grid map_grid(const Grid& grid, const AffineMap& g) {
  if (!g.is_diagonal()) throw validation_error("map_grid: map must be diagonal");
  if (g.dim() != static_cast<Eigen::Index>(grid.dim())) {
    throw validation_error("map_grid: dimension mismatch");
  }
  std::vector<GridAxis> axes;
  axes.reserve(grid.dim());
  for (std::size_t k = 0; k < grid.dim(); ++k) {
    const double c = g.C()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    const double off = g.b()(static_cast<Eigen::Index>(k));
    const double a = c * grid.axes()[k].min + off;
    const double b = c * grid.axes()[k].max + off;
    axes.push_back({std::min(a, b), std::max(a, b), grid.axes()[k].steps});
  }
  return Grid(std::move(axes));
}

// Change of variables f_g = |det C|^{-1} f o g^{-1} on the grid: the grid is
// mapped by g and the values are divided by |det C|. Only diagonal maps keep
// a rectangular grid rectangular.
inline DensityEstimate pushforward_density(const DensityEstimate& est, const AffineMap& g) {
  if (!g.is_diagonal()) {
    throw validation_error("pushforward_density: non-diagonal map would shear the grid");
  }
  Grid new_grid = map_grid(est.grid, g);
  const double inv_det = 1.0 / g.abs_det();
  const std::size_t d = est.grid.dim();
  std::vector<bool> flip(d);
  for (std::size_t k = 0; k < d; ++k) {
    flip[k] = g.C()(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) < 0.0;
  }
  std::vector<double> values(est.values.size());
  bool any_flip = false;
  for (bool f : flip) any_flip = any_flip || f;
  if (!any_flip) {
    for (std::size_t p = 0; p < values.size(); ++p) values[p] = est.values[p] * inv_det;
  } else {
    for (std::size_t p = 0; p < values.size(); ++p) {
      std::size_t rest = p;
      std::size_t src = 0;
      for (std::size_t k = d; k-- > 0;) {
        const auto steps = static_cast<std::size_t>(est.grid.axes()[k].steps);
        std::size_t idx = rest % steps;
        rest /= steps;
        if (flip[k]) idx = steps - 1 - idx;
        std::size_t stride = 1;
        for (std::size_t kk = k + 1; kk < d; ++kk) {
          stride *= static_cast<std::size_t>(est.grid.axes()[kk].steps);
        }
        src += idx * stride;
      }
      values[p] = est.values[src] * inv_det;
    }
  }
  return DensityEstimate(std::move(new_grid), std::move(values));
}

inline void require_same_grid(const DensityEstimate& f1, const DensityEstimate& f2,
                              const char* who) {
  if (!f1.grid.same_geometry(f2.grid)) {
    throw validation_error(std::string(who) + ": grids do not match");
  }
}

// Riemann sum of |f1 - f2|.
inline double l1_distance(const DensityEstimate& f1, const DensityEstimate& f2) {
  require_same_grid(f1, f2, "l1_distance");
  double s = 0.0;
  for (std::size_t p = 0; p < f1.values.size(); ++p) {
    s += std::abs(f1.values[p] - f2.values[p]);
  }
  return s * f1.grid.cell_volume();
}

// Unsquared-integral convention: rho = { integral (sqrt f1 - sqrt f2)^2 }^{1/2},
// maximum sqrt(2).
inline double hellinger(const DensityEstimate& f1, const DensityEstimate& f2) {
  require_same_grid(f1, f2, "hellinger");
  double s = 0.0;
  for (std::size_t p = 0; p < f1.values.size(); ++p) {
    const double diff = std::sqrt(f1.values[p]) - std::sqrt(f2.values[p]);
    s += diff * diff;
  }
  return std::sqrt(s * f1.grid.cell_volume());
}

// Predictive densities of two rescaled fits pulled back to the common
// original scale, then compared in L1. The grid argument lives on the
// original scale.
inline double compare_rescaled(const DrawSet& draws_a, const DrawSet& draws_b,
                               const AffineMap& g_a, const AffineMap& g_b, const Grid& grid,
                               int workers = 1) {
  if (!g_a.is_diagonal() || !g_b.is_diagonal()) {
    throw validation_error("compare_rescaled: maps must be diagonal");
  }
  DensityEstimate est_a = predictive_density(draws_a, map_grid(grid, g_a), workers);
  DensityEstimate est_b = predictive_density(draws_b, map_grid(grid, g_b), workers);
  DensityEstimate back_a = pushforward_density(est_a, g_a.inverse());
  DensityEstimate back_b = pushforward_density(est_b, g_b.inverse());
  return l1_distance(back_a, back_b);
}

struct DistanceMatrixResult {
  MatrixXd raw;         // pairwise L1 on the common scale
  MatrixXd normalized;  // raw / max entry, zero diagonal
  bool all_zero = false;
};

// Pull every estimate back to the common scale and tabulate pairwise L1
// distances, normalized by the largest observed distance.
inline DistanceMatrixResult normalized_distance_matrix(
    const std::vector<DensityEstimate>& estimates, const std::vector<AffineMap>& maps) {
  if (estimates.size() != maps.size()) {
    throw validation_error("normalized_distance_matrix: list length mismatch");
  }
  if (estimates.empty()) throw validation_error("normalized_distance_matrix: empty input");
  std::vector<DensityEstimate> back;
  back.reserve(estimates.size());
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    back.push_back(pushforward_density(estimates[i], maps[i].inverse()));
  }
  const auto m = static_cast<Eigen::Index>(estimates.size());
  MatrixXd raw = MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      raw(i, j) = raw(j, i) = l1_distance(back[static_cast<std::size_t>(i)],
                                          back[static_cast<std::size_t>(j)]);
    }
  }
  DistanceMatrixResult out{raw, MatrixXd::Zero(m, m), false};
  const double mx = raw.maxCoeff();
  if (mx > 0.0) {
    out.normalized = raw / mx;
  } else {
    out.all_zero = true;
  }
  return out;
}

}  // namespace dpmg
