#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dpmg/clustering.hpp"
#include "dpmg/density.hpp"
#include "dpmg/scenario.hpp"

namespace dpmg {

// Tasks write only into their own result slot, so the outcome is identical
// for any worker count.
inline void parallel_tasks(int workers, int n_tasks, const std::function<void(int)>& fn) {
  workers = std::max(1, workers);
  if (workers == 1 || n_tasks <= 1) {
    for (int t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  auto body = [&] {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= n_tasks) break;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n_tasks); ++w) pool.emplace_back(body);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// replicated rescaling study (two-component Gaussian or heavy-tail scenario)
// ---------------------------------------------------------------------------

struct MixtureStudyOptions {
  ScenarioKind kind = ScenarioKind::mog2d;
  int replicates = 10;
  std::vector<int> ns = {100, 300, 1000};
  std::vector<double> cs = {0.2, 0.5, 1.0, 2.0, 5.0};
  ChainConfig chain;  // seed field is ignored; per-fit seeds are derived
  int grid_steps = 200;
  double grid_pad = 0.25;
  std::uint64_t master_seed = 1;
  int workers = 1;
  bool compute_densities = true;
  bool compute_khat = true;

  static MixtureStudyOptions desk(ScenarioKind kind, std::uint64_t seed, int workers) {
    MixtureStudyOptions o;
    o.kind = kind;
    o.replicates = 10;
    o.master_seed = seed;
    o.workers = workers;
    o.chain.n_iter = 5000;
    o.chain.burn_in = 2500;
    o.chain.thin = 5;
    o.grid_steps = kind == ScenarioKind::mog2d ? 200 : 2000;
    return o;
  }

  static MixtureStudyOptions paper(ScenarioKind kind, std::uint64_t seed, int workers) {
    MixtureStudyOptions o = desk(kind, seed, workers);
    o.replicates = 100;
    o.chain.thin = 1;
    return o;
  }
};

struct ReplicateOutcome {
  std::vector<int> k_hat;  // per c
  MatrixXd l1;             // cs x cs pairwise, common original scale
  bool failed = false;
  std::string error;
};

struct MixtureStudyResult {
  std::vector<int> ns;
  std::vector<double> cs;
  // outcomes[n_idx][replicate]
  std::vector<std::vector<ReplicateOutcome>> outcomes;
  MatrixXd mean_k;                 // ns x cs
  std::vector<MatrixXd> mean_l1;   // per n
  std::vector<MatrixXd> norm_l1;   // per n, divided by the largest mean distance
  double max_mean_l1 = 0.0;
};

inline MixtureStudyResult run_mixture_study(const MixtureStudyOptions& opts) {
  const auto n_count = opts.ns.size();
  const auto c_count = opts.cs.size();
  MixtureStudyResult res;
  res.ns = opts.ns;
  res.cs = opts.cs;
  res.outcomes.assign(n_count, std::vector<ReplicateOutcome>(
                                   static_cast<std::size_t>(opts.replicates)));
  const ScenarioModel model = scenario_model(opts.kind);
  const Eigen::Index d = model.pi.dim();

  const int n_tasks = static_cast<int>(n_count) * opts.replicates;
  parallel_tasks(opts.workers, n_tasks, [&](int task) {
    const auto n_idx = static_cast<std::size_t>(task) / static_cast<std::size_t>(opts.replicates);
    const int rep = task % opts.replicates;
    ReplicateOutcome& slot = res.outcomes[n_idx][static_cast<std::size_t>(rep)];
    try {
      RngStream data_rng(opts.master_seed,
                         mix_ids(101, n_idx, static_cast<std::uint64_t>(rep)));
      ScenarioSpec spec{opts.kind, opts.ns[n_idx], 1.0};
      const MatrixXd base_data = simulate_data(spec, data_rng);
      const Grid common_grid = Grid::from_data(base_data, opts.grid_pad, opts.grid_steps);

      std::vector<DensityEstimate> estimates;
      std::vector<AffineMap> maps;
      slot.k_hat.assign(c_count, 0);
      for (std::size_t c_idx = 0; c_idx < c_count; ++c_idx) {
        const double c = opts.cs[c_idx];
        const MatrixXd scaled = c * base_data;
        ChainConfig cfg = opts.chain;
        cfg.seed = mix_ids(opts.master_seed, 102, mix_ids(n_idx, static_cast<std::uint64_t>(rep)),
                           c_idx);
        DrawSet draws = run_chain(scaled, model.pi, model.hyper, model.alpha, cfg);
        if (opts.compute_khat) {
          const PSM p = psm(draws);
          slot.k_hat[c_idx] = optimal_partition(draws, p).n_blocks();
        }
        if (opts.compute_densities) {
          const AffineMap g = AffineMap::scaling(c, d);
          estimates.push_back(predictive_density(draws, map_grid(common_grid, g)));
          maps.push_back(g);
        }
      }
      if (opts.compute_densities) {
        std::vector<DensityEstimate> back;
        back.reserve(estimates.size());
        for (std::size_t i = 0; i < estimates.size(); ++i) {
          back.push_back(pushforward_density(estimates[i], maps[i].inverse()));
        }
        slot.l1 = MatrixXd::Zero(static_cast<Eigen::Index>(c_count),
                                 static_cast<Eigen::Index>(c_count));
        for (std::size_t i = 0; i < c_count; ++i) {
          for (std::size_t j = i + 1; j < c_count; ++j) {
            const double dist = l1_distance(back[i], back[j]);
            slot.l1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dist;
            slot.l1(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = dist;
          }
        }
      }
    } catch (const std::exception& e) {
      slot.failed = true;
      slot.error = e.what();
    }
  });

  res.mean_k = MatrixXd::Zero(static_cast<Eigen::Index>(n_count),
                              static_cast<Eigen::Index>(c_count));
  res.mean_l1.assign(n_count, MatrixXd::Zero(static_cast<Eigen::Index>(c_count),
                                             static_cast<Eigen::Index>(c_count)));
  for (std::size_t ni = 0; ni < n_count; ++ni) {
    int ok = 0;
    for (const auto& rep : res.outcomes[ni]) {
      if (rep.failed) continue;
      ++ok;
      for (std::size_t ci = 0; ci < c_count; ++ci) {
        if (!rep.k_hat.empty()) {
          res.mean_k(static_cast<Eigen::Index>(ni), static_cast<Eigen::Index>(ci)) +=
              rep.k_hat[ci];
        }
      }
      if (rep.l1.size() > 0) res.mean_l1[ni] += rep.l1;
    }
    if (ok > 0) {
      res.mean_k.row(static_cast<Eigen::Index>(ni)) /= static_cast<double>(ok);
      res.mean_l1[ni] /= static_cast<double>(ok);
    }
  }
  res.max_mean_l1 = 0.0;
  for (const auto& m : res.mean_l1) res.max_mean_l1 = std::max(res.max_mean_l1, m.maxCoeff());
  res.norm_l1 = res.mean_l1;
  if (res.max_mean_l1 > 0.0) {
    for (auto& m : res.norm_l1) m /= res.max_mean_l1;
  }
  return res;
}

// ---------------------------------------------------------------------------
// matched-randomness invariance study for diagonal maps
// ---------------------------------------------------------------------------

struct MatchedInvarianceResult {
  std::vector<std::uint8_t> alloc_match;  // per retained draw
  double max_mu_rel_err = 0.0;
  double max_sigma_rel_err = 0.0;
  bool all_match = true;
};

// Compares a run on (X, pi) against a matched-seed run on (g(X), pi_g):
// allocation snapshots must agree exactly, cluster parameters up to the map.
inline MatchedInvarianceResult compare_matched_runs(const DrawSet& base, const DrawSet& mapped,
                                                    const AffineMap& g) {
  MatchedInvarianceResult out;
  if (base.draws.size() != mapped.draws.size()) {
    out.all_match = false;
    return out;
  }
  const MatrixXd& C = g.C();
  for (std::size_t t = 0; t < base.draws.size(); ++t) {
    const auto& a = base.draws[t];
    const auto& b = mapped.draws[t];
    const bool match = a.allocations == b.allocations;
    out.alloc_match.push_back(match ? 1 : 0);
    if (!match) {
      out.all_match = false;
      continue;
    }
    if (a.clusters.size() != b.clusters.size()) {
      out.all_match = false;
      continue;
    }
    for (std::size_t k = 0; k < a.clusters.size(); ++k) {
      const VectorXd mu_mapped = g.apply(a.clusters[k].mu);
      const double mu_err = (b.clusters[k].mu - mu_mapped).norm() /
                            std::max(1e-12, mu_mapped.norm());
      const MatrixXd sig_mapped = C * a.clusters[k].sigma.mat() * C.transpose();
      const double sig_err = (b.clusters[k].sigma.mat() - sig_mapped).norm() /
                             std::max(1e-12, sig_mapped.norm());
      out.max_mu_rel_err = std::max(out.max_mu_rel_err, mu_err);
      out.max_sigma_rel_err = std::max(out.max_sigma_rel_err, sig_err);
    }
  }
  return out;
}

struct Prop1Options {
  int n_maps = 5;
  int n_seeds = 3;
  int n = 50;
  int n_iter = 500;
  std::uint64_t master_seed = 1;
  int workers = 1;
};

struct Prop1RunResult {
  int map_index = 0;
  int seed_index = 0;
  AffineMap map = AffineMap::identity(2);
  MatchedInvarianceResult comparison;
};

// Random diagonal-positive map: scales log-uniform in [1/4, 4], offsets
// uniform in [-3, 3].
inline AffineMap random_diagonal_map(Eigen::Index d, RngStream& rng) {
  VectorXd scales(d), offset(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    scales(k) = std::exp((2.0 * rng.uniform01() - 1.0) * std::log(4.0));
    offset(k) = (2.0 * rng.uniform01() - 1.0) * 3.0;
  }
  return AffineMap::diagonal(scales, offset);
}

inline std::vector<Prop1RunResult> run_prop1_study(const Prop1Options& opts) {
  const BaseMeasure pi(VectorXd::Zero(2), SPDMatrix(MatrixXd::Identity(2, 2) * 15.0), 4.0,
                       SPDMatrix::identity(2));
  std::vector<Prop1RunResult> results(
      static_cast<std::size_t>(opts.n_maps) * static_cast<std::size_t>(opts.n_seeds),
      Prop1RunResult{});
  parallel_tasks(opts.workers, static_cast<int>(results.size()), [&](int task) {
    const int map_idx = task / opts.n_seeds;
    const int seed_idx = task % opts.n_seeds;
    RngStream map_rng(opts.master_seed, mix_ids(201, static_cast<std::uint64_t>(map_idx)));
    const AffineMap g = random_diagonal_map(2, map_rng);
    RngStream data_rng(opts.master_seed, mix_ids(202, static_cast<std::uint64_t>(seed_idx)));
    ScenarioSpec spec{ScenarioKind::mog2d, opts.n, 1.0};
    const MatrixXd X = simulate_data(spec, data_rng);
    ChainConfig cfg;
    cfg.n_iter = opts.n_iter;
    cfg.burn_in = 0;
    cfg.thin = 1;
    cfg.seed = mix_ids(opts.master_seed, 203, static_cast<std::uint64_t>(map_idx),
                       static_cast<std::uint64_t>(seed_idx));
    const DrawSet base = run_chain(X, pi, std::nullopt, AlphaSpec::fixed(1.0), cfg);
    const DrawSet mapped =
        run_chain(g.apply_data(X), map_base_measure(pi, g), std::nullopt,
                  AlphaSpec::fixed(1.0), cfg);
    Prop1RunResult r;
    r.map_index = map_idx;
    r.seed_index = seed_idx;
    r.map = g;
    r.comparison = compare_matched_runs(base, mapped, g);
    results[static_cast<std::size_t>(task)] = std::move(r);
  });
  return results;
}

}  // namespace dpmg
