#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dpmg/partition.hpp"
#include "dpmg/sampler.hpp"

namespace dpmg {

// Posterior similarity matrix: entry (i,j) is the fraction of retained draws
// allocating i and j together.
struct PSM {
  MatrixXd m;

  explicit PSM(MatrixXd mat) : m(std::move(mat)) {
    if (m.rows() != m.cols() || m.rows() == 0) {
      throw validation_error("PSM: matrix must be square and non-empty");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, i) - 1.0) > 1e-12) throw validation_error("PSM: diagonal must be 1");
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (!(m(i, j) >= 0.0 && m(i, j) <= 1.0)) {
          throw validation_error("PSM: entries must lie in [0,1]");
        }
        if (std::abs(m(i, j) - m(j, i)) > 1e-12) {
          throw validation_error("PSM: matrix must be symmetric");
        }
      }
    }
  }

  Eigen::Index size() const { return m.rows(); }
};

inline PSM psm(const DrawSet& draws) {
  if (draws.draws.empty()) throw validation_error("psm: empty draw set");
  const auto n = static_cast<std::size_t>(draws.n);
  MatrixXd counts = MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<std::vector<int>> blocks;
  for (const auto& dr : draws.draws) {
    blocks.assign(static_cast<std::size_t>(dr.K), {});
    for (std::size_t i = 0; i < n; ++i) {
      blocks[static_cast<std::size_t>(dr.allocations[i])].push_back(static_cast<int>(i));
    }
    for (const auto& b : blocks) {
      for (std::size_t a = 0; a < b.size(); ++a) {
        for (std::size_t c = a + 1; c < b.size(); ++c) {
          counts(b[a], b[c]) += 1.0;
        }
      }
    }
  }
  const double t = static_cast<double>(draws.draws.size());
  MatrixXd out = MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < out.cols(); ++j) {
      out(i, j) = out(j, i) = counts(i, j) / t;
    }
  }
  return PSM(std::move(out));
}

inline double expected_vi_bound_with_row_sums(const Partition& candidate, const PSM& psm_mat,
                                              const std::vector<double>& row_sums) {
  const auto n = candidate.size();
  const auto blocks = candidate.blocks();
  double total = 0.0;
  for (const auto& block : blocks) {
    const double log_block = std::log(static_cast<double>(block.size()));
    for (int i : block) {
      double in_block = 0.0;
      const auto row = psm_mat.m.row(i);
      for (int j : block) in_block += row(j);
      total += log_block + std::log(row_sums[static_cast<std::size_t>(i)]) -
               2.0 * std::log(in_block);
    }
  }
  return total / static_cast<double>(n);
}

// Jensen-swapped surrogate of the expected VI of a candidate against the
// posterior summarized by the PSM, natural logarithm:
// (1/n) sum_i [ log n_{c,i} + log sum_j p_ij - 2 log sum_{j in block(i)} p_ij ].
inline double expected_vi_bound(const Partition& candidate, const PSM& psm_mat) {
  const auto n = candidate.size();
  if (static_cast<std::size_t>(psm_mat.size()) != n) {
    throw validation_error("expected_vi_bound: dimension mismatch");
  }
  std::vector<double> row_sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    row_sums[i] = psm_mat.m.row(static_cast<Eigen::Index>(i)).sum();
  }
  return expected_vi_bound_with_row_sums(candidate, psm_mat, row_sums);
}

// Average-linkage agglomeration of the dissimilarity 1 - PSM via the
// nearest-neighbor chain; returns the partition at every merge height,
// starting from all singletons. Ties break toward the smallest index.
inline std::vector<Partition> average_linkage_cuts(const PSM& psm_mat) {
  const auto n = static_cast<std::size_t>(psm_mat.size());
  MatrixXd dist = MatrixXd::Ones(psm_mat.m.rows(), psm_mat.m.cols()) - psm_mat.m;
  std::vector<int> active_size(n, 1);
  std::vector<bool> alive(n, true);
  std::vector<std::int32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<std::int32_t>(i);

  std::vector<Partition> cuts;
  cuts.reserve(n);
  cuts.push_back(Partition(labels));

  std::vector<std::size_t> chain;
  std::size_t merges_left = n - 1;
  while (merges_left > 0) {
    if (chain.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (alive[i]) {
          chain.push_back(i);
          break;
        }
      }
    }
    const std::size_t cur = chain.back();
    std::size_t best = n;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (!alive[j] || j == cur) continue;
      const double dj = dist(static_cast<Eigen::Index>(cur), static_cast<Eigen::Index>(j));
      if (dj < best_d) {
        best_d = dj;
        best = j;
      }
    }
    if (chain.size() >= 2 && best_d >= dist(static_cast<Eigen::Index>(cur),
                                            static_cast<Eigen::Index>(chain[chain.size() - 2]))) {
      // Reciprocal nearest neighbors: merge the top two of the chain.
      const std::size_t a = std::min(cur, chain[chain.size() - 2]);
      const std::size_t b = std::max(cur, chain[chain.size() - 2]);
      chain.pop_back();
      chain.pop_back();
      const double wa = static_cast<double>(active_size[a]);
      const double wb = static_cast<double>(active_size[b]);
      for (std::size_t j = 0; j < n; ++j) {
        if (!alive[j] || j == a || j == b) continue;
        const double daj = dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j));
        const double dbj = dist(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(j));
        const double merged = (wa * daj + wb * dbj) / (wa + wb);
        dist(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = merged;
        dist(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(a)) = merged;
      }
      alive[b] = false;
      active_size[a] += active_size[b];
      const std::int32_t la = labels[a];
      const std::int32_t lb = labels[b];
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == lb) labels[i] = la;
      }
      cuts.push_back(Partition(labels));
      --merges_left;
    } else {
      chain.push_back(best);
    }
  }
  return cuts;
}

// Minimizer of the VI surrogate over the sampled partitions plus all
// average-linkage cut heights; ties prefer fewer clusters, then the earliest
// candidate.
inline Partition optimal_partition(const DrawSet& draws, const PSM& psm_mat) {
  if (draws.draws.empty()) throw validation_error("optimal_partition: empty draw set");
  std::vector<Partition> candidates;
  candidates.reserve(draws.draws.size());
  std::unordered_map<Partition, bool, PartitionHash> seen;
  for (const auto& dr : draws.draws) {
    Partition p(dr.allocations);
    if (seen.emplace(p, true).second) candidates.push_back(std::move(p));
  }
  for (auto& cut : average_linkage_cuts(psm_mat)) {
    if (seen.emplace(cut, true).second) candidates.push_back(std::move(cut));
  }
  const auto n = static_cast<std::size_t>(psm_mat.size());
  std::vector<double> row_sums(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    row_sums[i] = psm_mat.m.row(static_cast<Eigen::Index>(i)).sum();
  }
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double score = expected_vi_bound_with_row_sums(candidates[c], psm_mat, row_sums);
    const bool better =
        score < best_score ||
        (score == best_score && candidates[c].n_blocks() < candidates[best].n_blocks());
    if (better) {
      best_score = score;
      best = c;
    }
  }
  return candidates[best];
}

struct CredibleBall {
  Partition center;
  double radius;
  double level;
  Partition vertical_lower;   // most blocks, then farthest from the center
  Partition vertical_upper;   // fewest blocks, then farthest from the center
  Partition horizontal;       // farthest from the center
};

// Smallest VI ball around the center holding at least `level` of the sampled
// partitions, with the extreme-cluster-count bound partitions.
inline CredibleBall credible_ball(const DrawSet& draws, const Partition& center,
                                  double level = 0.95) {
  if (draws.draws.empty()) throw validation_error("credible_ball: empty draw set");
  if (!(level > 0.0 && level < 1.0)) {
    throw validation_error("credible_ball: level must lie in (0,1)");
  }
  struct UniqueEntry {
    Partition p;
    double dist;
    std::size_t count;
    std::size_t first_index;
  };
  std::vector<UniqueEntry> uniq;
  std::unordered_map<Partition, std::size_t, PartitionHash> index;
  for (std::size_t t = 0; t < draws.draws.size(); ++t) {
    Partition p(draws.draws[t].allocations);
    auto it = index.find(p);
    if (it == index.end()) {
      index.emplace(p, uniq.size());
      uniq.push_back({p, vi(p, center), 1, t});
    } else {
      ++uniq[it->second].count;
    }
  }
  std::vector<double> dists;
  dists.reserve(draws.draws.size());
  for (const auto& e : uniq) {
    for (std::size_t c = 0; c < e.count; ++c) dists.push_back(e.dist);
  }
  std::sort(dists.begin(), dists.end());
  const auto t_total = static_cast<double>(dists.size());
  const auto k = static_cast<std::size_t>(std::ceil(level * t_total));
  const double radius = dists[std::min(dists.size() - 1, k == 0 ? 0 : k - 1)];

  const UniqueEntry* lower = nullptr;
  const UniqueEntry* upper = nullptr;
  const UniqueEntry* horiz = nullptr;
  for (const auto& e : uniq) {
    if (e.dist > radius) continue;
    if (!lower || e.p.n_blocks() > lower->p.n_blocks() ||
        (e.p.n_blocks() == lower->p.n_blocks() &&
         (e.dist > lower->dist || (e.dist == lower->dist && e.first_index < lower->first_index)))) {
      lower = &e;
    }
    if (!upper || e.p.n_blocks() < upper->p.n_blocks() ||
        (e.p.n_blocks() == upper->p.n_blocks() &&
         (e.dist > upper->dist || (e.dist == upper->dist && e.first_index < upper->first_index)))) {
      upper = &e;
    }
    if (!horiz || e.dist > horiz->dist ||
        (e.dist == horiz->dist && (e.p.n_blocks() < horiz->p.n_blocks() ||
                                   (e.p.n_blocks() == horiz->p.n_blocks() &&
                                    e.first_index < horiz->first_index)))) {
      horiz = &e;
    }
  }
  return {center, radius, level, lower->p, upper->p, horiz->p};
}

}  // namespace dpmg
