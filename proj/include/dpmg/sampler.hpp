#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpmg/distributions.hpp"
#include "dpmg/model.hpp"

namespace dpmg {

inline constexpr std::uint64_t kAllocStream = 1;
inline constexpr std::uint64_t kParamStream = 2;
inline constexpr std::uint64_t kHyperStream = 3;
inline constexpr std::uint64_t kDensityStream = 4;

struct Cluster {
  VectorXd mu;
  SPDMatrix sigma;
  int size;
};

struct ChainConfig {
  int n_iter = 5000;
  int burn_in = 2500;
  int thin = 1;
  int aux_m = 3;
  std::uint64_t seed = 0;
  bool record_params = true;
  // Start from one cluster holding everything (default) or from all
  // singletons. Both reach the same stationary distribution; the option
  // exists for burn-in studies.
  bool init_singletons = false;

  void validate() const {
    if (n_iter < 1) throw validation_error("ChainConfig: n_iter must be >= 1");
    if (burn_in < 0 || burn_in > n_iter) {
      throw validation_error("ChainConfig: burn_in must lie in [0, n_iter]");
    }
    if (thin < 1) throw validation_error("ChainConfig: thin must be >= 1");
    if (aux_m < 1) throw validation_error("ChainConfig: aux_m must be >= 1");
  }
};

struct ChainState {
  std::vector<std::int32_t> allocations;
  std::vector<Cluster> clusters;
  BaseMeasure pi;
  double alpha;
  int iteration = 0;
};

struct Draw {
  int iter;
  double alpha;
  int K;
  std::vector<std::int32_t> allocations;
  std::vector<Cluster> clusters;        // empty when record_params is off
  std::optional<BaseMeasure> pi;        // absent when record_params is off
};

struct DrawSet {
  std::vector<Draw> draws;
  int n = 0;
  int d = 0;
  bool hyper_mode = false;
  ChainConfig config;
  std::shared_ptr<const MatrixXd> data;  // absent for deserialized sets
  bool empty_warning = false;
};

// Conditional parameters of mu given sigma for one cluster with nj members
// averaging xbar: B_n = (B0^{-1} + nj sigma^{-1})^{-1},
// m_n = B_n (B0^{-1} m0 + nj sigma^{-1} xbar). nj = 0 falls back to the prior.
struct MuConditional {
  VectorXd mean;
  MatrixXd cov;
};

inline MuConditional conditional_mu_given_sigma(const BaseMeasure& pi, const SPDMatrix& sigma,
                                                int nj, const VectorXd& xbar) {
  if (nj == 0) return {pi.m0, pi.B0.mat()};
  const MatrixXd b0_inv = pi.B0.inverse();
  const MatrixXd sigma_inv = sigma.inverse();
  MatrixXd prec = b0_inv + static_cast<double>(nj) * sigma_inv;
  prec = 0.5 * (prec + prec.transpose()).eval();
  SPDMatrix prec_spd(prec);
  const VectorXd rhs = b0_inv * pi.m0 + static_cast<double>(nj) * (sigma_inv * xbar);
  MatrixXd cov = prec_spd.inverse();
  return {prec_spd.solve(rhs), std::move(cov)};
}

// Conditional for sigma given mu: IW(nu0 + nj, S0 + sum (x - mu)(x - mu)^T),
// with the sum expressed as scatter-around-xbar plus the mean-shift term.
struct SigmaConditional {
  double df;
  MatrixXd scale;
};

inline SigmaConditional conditional_sigma_given_mu(const BaseMeasure& pi, const VectorXd& mu,
                                                   int nj, const VectorXd& xbar,
                                                   const MatrixXd& scatter) {
  if (nj == 0) return {pi.nu0, pi.S0.mat()};
  const VectorXd shift = xbar - mu;
  MatrixXd scale = pi.S0.mat() + scatter +
                   static_cast<double>(nj) * (shift * shift.transpose());
  scale = 0.5 * (scale + scale.transpose()).eval();
  return {pi.nu0 + static_cast<double>(nj), std::move(scale)};
}

// Normal/inverse-Wishart posterior for (m0, B0) given the distinct cluster
// locations treated as exchangeable N(m0, B0) observations.
struct NiwPosterior {
  double kappa_n;
  VectorXd m_n;
  double df_n;
  MatrixXd scale_n;
};

inline NiwPosterior niw_posterior(const HyperPriorSpec& h,
                                  const std::vector<VectorXd>& locations) {
  if (locations.empty()) throw validation_error("niw_posterior: no cluster locations");
  const Eigen::Index d = h.dim();
  const auto K = static_cast<double>(locations.size());
  VectorXd mbar = VectorXd::Zero(d);
  for (const auto& mu : locations) mbar += mu;
  mbar /= K;
  MatrixXd scatter = MatrixXd::Zero(d, d);
  for (const auto& mu : locations) {
    const VectorXd dev = mu - mbar;
    scatter += dev * dev.transpose();
  }
  const double kap_n = h.kappa0 + K;
  const VectorXd m_n = (h.kappa0 * h.m0_mean + K * mbar) / kap_n;
  const VectorXd shift = mbar - h.m0_mean;
  MatrixXd S_n = h.b0_scale.mat() + scatter +
                 (h.kappa0 * K / kap_n) * (shift * shift.transpose());
  S_n = 0.5 * (S_n + S_n.transpose()).eval();
  return {kap_n, m_n, h.b0_df + K, std::move(S_n)};
}

// One step of the two-gamma beta augmentation for a gamma-prior
// concentration parameter.
inline double escobar_west_alpha_step(double alpha, int K, int n, const AlphaSpec& spec,
                                      RngStream& rng) {
  const double eta = sample_beta(alpha + 1.0, static_cast<double>(n), rng);
  const double rate_n = spec.rate - std::log(eta);
  const double odds_num = spec.shape + static_cast<double>(K) - 1.0;
  const double p_first = odds_num / (odds_num + static_cast<double>(n) * rate_n);
  const double u = rng.uniform01();
  const double shape_n =
      (u < p_first) ? spec.shape + static_cast<double>(K) : spec.shape + static_cast<double>(K) - 1.0;
  return sample_gamma(shape_n, rate_n, rng);
}

// Marginal Gibbs sampler on the Polya-urn representation with auxiliary
// components for the non-conjugate base measure. Per allocation move the
// parameter of an emptied singleton occupies the first auxiliary slot and
// the remaining slots are fresh base-measure draws.
//
// Stream discipline: allocation uniforms, parameter draws and
// hyperparameter/alpha draws come from three streams derived from the seed,
// so matched-seed runs consume allocation randomness identically even when
// cluster births differ.
class GibbsSampler {
 public:
  GibbsSampler(std::shared_ptr<const MatrixXd> data, const BaseMeasure& pi0,
               std::optional<HyperPriorSpec> hyper, AlphaSpec alpha_spec, ChainConfig config)
      : data_(std::move(data)),
        pi0_(pi0),
        hyper_(std::move(hyper)),
        alpha_spec_(alpha_spec),
        config_(config),
        alloc_rng_(config.seed, kAllocStream),
        param_rng_(config.seed, kParamStream),
        hyper_rng_(config.seed, kHyperStream),
        prior_sigma_sampler_(pi0.nu0, pi0.S0),
        state_{{}, {}, pi0, alpha_spec.initial_value(), 0} {
    config_.validate();
    const Eigen::Index n = data_->rows();
    const Eigen::Index d = data_->cols();
    if (n < 1) throw validation_error("GibbsSampler: empty data");
    if (pi0.dim() != d) throw validation_error("GibbsSampler: base measure dimension mismatch");
    if (hyper_ && hyper_->dim() != d) {
      throw validation_error("GibbsSampler: hyperprior dimension mismatch");
    }
    log_table_.resize(static_cast<std::size_t>(n) + 1, 0.0);
    for (std::size_t k = 1; k < log_table_.size(); ++k) {
      log_table_[k] = std::log(static_cast<double>(k));
    }
    init_state();
  }

  const ChainState& state() const { return state_; }
  const ChainConfig& config() const { return config_; }

  // One full iteration in fixed order.
  void sweep() {
    update_allocations();
    update_cluster_params();
    if (hyper_) update_hyperparams();
    if (alpha_spec_.mode == AlphaSpec::Mode::gamma) update_alpha();
    ++state_.iteration;
  }

  void update_allocations() {
    const auto& data = *data_;
    const int n = static_cast<int>(data.rows());
    const int m = config_.aux_m;
    const double log_alpha_over_m =
        state_.alpha > 0.0 ? std::log(state_.alpha / static_cast<double>(m))
                           : -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const VectorXd x = data.row(i).transpose();
      const auto j = static_cast<std::size_t>(state_.allocations[i]);
      const bool was_singleton = state_.clusters[j].size == 1;
      aux_.clear();
      if (was_singleton) {
        aux_.push_back(std::move(state_.clusters[j]));
        aux_.back().size = 0;
        state_.clusters.erase(state_.clusters.begin() + static_cast<std::ptrdiff_t>(j));
        for (auto& l : state_.allocations) {
          if (l > static_cast<std::int32_t>(j)) --l;
        }
      } else {
        --state_.clusters[j].size;
      }
      while (static_cast<int>(aux_.size()) < m) aux_.push_back(draw_from_base(param_rng_));

      const std::size_t n_live = state_.clusters.size();
      logw_.clear();
      for (const auto& c : state_.clusters) {
        logw_.push_back(log_table_[static_cast<std::size_t>(c.size)] +
                        mvn_logpdf(x, c.mu, c.sigma));
      }
      for (const auto& a : aux_) {
        logw_.push_back(log_alpha_over_m + mvn_logpdf(x, a.mu, a.sigma));
      }
      const double u = alloc_rng_.uniform01();

      bool any_finite = false;
      for (double w : logw_) {
        if (std::isfinite(w)) {
          any_finite = true;
          break;
        }
      }
      if (!any_finite) {
        // alpha = 0 with no live cluster: the observation keeps its component.
        if (was_singleton) {
          aux_.front().size = 1;
          state_.clusters.push_back(std::move(aux_.front()));
          state_.allocations[static_cast<std::size_t>(i)] =
              static_cast<std::int32_t>(state_.clusters.size() - 1);
        } else {
          ++state_.clusters[j].size;
        }
        continue;
      }

      const std::size_t pick = categorical_sample(logw_, u);
      if (pick < n_live) {
        state_.allocations[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(pick);
        ++state_.clusters[pick].size;
      } else {
        Cluster fresh = std::move(aux_[pick - n_live]);
        fresh.size = 1;
        state_.clusters.push_back(std::move(fresh));
        state_.allocations[static_cast<std::size_t>(i)] =
            static_cast<std::int32_t>(state_.clusters.size() - 1);
      }
    }
  }

  // Refresh every live cluster: mu | sigma then sigma | mu, in label order.
  void update_cluster_params() {
    const auto& data = *data_;
    const Eigen::Index d = data.cols();
    const std::size_t K = state_.clusters.size();
    std::vector<std::vector<int>> members(K);
    for (std::size_t i = 0; i < state_.allocations.size(); ++i) {
      members[static_cast<std::size_t>(state_.allocations[i])].push_back(static_cast<int>(i));
    }
    for (std::size_t k = 0; k < K; ++k) {
      const auto& idx = members[k];
      const int nj = static_cast<int>(idx.size());
      VectorXd xbar = VectorXd::Zero(d);
      for (int i : idx) xbar += data.row(i).transpose();
      xbar /= static_cast<double>(nj);
      MatrixXd scatter = MatrixXd::Zero(d, d);
      for (int i : idx) {
        const VectorXd dev = data.row(i).transpose() - xbar;
        scatter += dev * dev.transpose();
      }
      scatter = 0.5 * (scatter + scatter.transpose()).eval();

      const MuConditional mc =
          conditional_mu_given_sigma(state_.pi, state_.clusters[k].sigma, nj, xbar);
      state_.clusters[k].mu = sample_mvn(mc.mean, SPDMatrix(mc.cov), param_rng_);
      const SigmaConditional sc =
          conditional_sigma_given_mu(state_.pi, state_.clusters[k].mu, nj, xbar, scatter);
      state_.clusters[k].sigma = sample_inv_wishart(sc.df, SPDMatrix(sc.scale), param_rng_);
    }
  }

  // Normal/inverse-Wishart conjugate update of (m0, B0) given the distinct
  // cluster locations. A no-op without a hyperprior.
  void update_hyperparams() {
    if (!hyper_) return;
    std::vector<VectorXd> locations;
    locations.reserve(state_.clusters.size());
    for (const auto& c : state_.clusters) locations.push_back(c.mu);
    const NiwPosterior post = niw_posterior(*hyper_, locations);
    const SPDMatrix B0_new =
        sample_inv_wishart(post.df_n, SPDMatrix(post.scale_n), hyper_rng_);
    const VectorXd m0_new =
        sample_mvn(post.m_n, SPDMatrix(B0_new.mat() / post.kappa_n), hyper_rng_);
    state_.pi = BaseMeasure(m0_new, B0_new, state_.pi.nu0, state_.pi.S0);
  }

  // Beta-augmentation update of the concentration parameter; identity in
  // fixed mode.
  void update_alpha() {
    if (alpha_spec_.mode != AlphaSpec::Mode::gamma) return;
    state_.alpha = escobar_west_alpha_step(state_.alpha,
                                           static_cast<int>(state_.clusters.size()),
                                           static_cast<int>(data_->rows()), alpha_spec_,
                                           hyper_rng_);
  }

  DrawSet run() {
    DrawSet out;
    out.n = static_cast<int>(data_->rows());
    out.d = static_cast<int>(data_->cols());
    out.hyper_mode = hyper_.has_value();
    out.config = config_;
    out.data = data_;
    const int retained = (config_.n_iter - config_.burn_in) / config_.thin;
    out.empty_warning = retained == 0;
    out.draws.reserve(static_cast<std::size_t>(retained > 0 ? retained : 0));
    for (int iter = 1; iter <= config_.n_iter; ++iter) {
      try {
        sweep();
      } catch (const numeric_error& e) {
        throw numeric_error("iteration " + std::to_string(iter) + ": " + e.what());
      }
      const int past_burn = iter - config_.burn_in;
      if (past_burn > 0 && past_burn % config_.thin == 0) {
        out.draws.push_back(snapshot(iter));
      }
    }
    return out;
  }

  Draw snapshot(int iter) const {
    Draw d;
    d.iter = iter;
    d.alpha = state_.alpha;
    d.K = static_cast<int>(state_.clusters.size());
    d.allocations = state_.allocations;
    if (config_.record_params) {
      d.clusters = state_.clusters;
      d.pi = state_.pi;
    }
    return d;
  }

  Cluster draw_from_base(RngStream& rng) const {
    VectorXd mu = sample_mvn(state_.pi.m0, state_.pi.B0, rng);
    SPDMatrix sigma = prior_sigma_sampler_.draw(rng);
    return {std::move(mu), std::move(sigma), 0};
  }

 private:
  // Cluster parameters come from their conditionals given the starting
  // allocation, seeded at the prior mean of sigma. The default start is one
  // cluster holding every observation.
  void init_state() {
    const auto& data = *data_;
    const Eigen::Index n = data.rows();
    const Eigen::Index d = data.cols();
    if (hyper_) {
      const MatrixXd B0_init =
          hyper_->b0_scale.mat() / (hyper_->b0_df - static_cast<double>(d) - 1.0);
      state_.pi = BaseMeasure(hyper_->m0_mean, SPDMatrix(B0_init), pi0_.nu0, pi0_.S0);
    }
    state_.clusters.clear();
    const SPDMatrix sigma_init(state_.pi.expected_sigma());
    auto conditional_draw = [&](int nj, const VectorXd& xbar, const MatrixXd& scatter) {
      const MuConditional mc = conditional_mu_given_sigma(state_.pi, sigma_init, nj, xbar);
      VectorXd mu = sample_mvn(mc.mean, SPDMatrix(mc.cov), param_rng_);
      const SigmaConditional sc =
          conditional_sigma_given_mu(state_.pi, mu, nj, xbar, scatter);
      SPDMatrix sigma = sample_inv_wishart(sc.df, SPDMatrix(sc.scale), param_rng_);
      return Cluster{std::move(mu), std::move(sigma), nj};
    };
    if (config_.init_singletons) {
      state_.allocations.resize(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) {
        state_.allocations[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
        state_.clusters.push_back(
            conditional_draw(1, data.row(i).transpose(), MatrixXd::Zero(d, d)));
      }
    } else {
      state_.allocations.assign(static_cast<std::size_t>(n), 0);
      const VectorXd xbar = data.colwise().mean();
      MatrixXd scatter = MatrixXd::Zero(d, d);
      for (Eigen::Index i = 0; i < n; ++i) {
        const VectorXd dev = data.row(i).transpose() - xbar;
        scatter += dev * dev.transpose();
      }
      scatter = 0.5 * (scatter + scatter.transpose()).eval();
      state_.clusters.push_back(conditional_draw(static_cast<int>(n), xbar, scatter));
    }
    state_.alpha = alpha_spec_.initial_value();
    state_.iteration = 0;
  }

  std::shared_ptr<const MatrixXd> data_;
  BaseMeasure pi0_;
  std::optional<HyperPriorSpec> hyper_;
  AlphaSpec alpha_spec_;
  ChainConfig config_;
  RngStream alloc_rng_;
  RngStream param_rng_;
  RngStream hyper_rng_;
  InvWishartSampler prior_sigma_sampler_;
  ChainState state_;
  std::vector<double> log_table_;
  std::vector<Cluster> aux_;
  std::vector<double> logw_;
};

inline DrawSet run_chain(std::shared_ptr<const MatrixXd> data, const BaseMeasure& pi,
                         std::optional<HyperPriorSpec> hyper, const AlphaSpec& alpha_spec,
                         const ChainConfig& config) {
  GibbsSampler sampler(std::move(data), pi, std::move(hyper), alpha_spec, config);
  return sampler.run();
}

inline DrawSet run_chain(const MatrixXd& data, const BaseMeasure& pi,
                         std::optional<HyperPriorSpec> hyper, const AlphaSpec& alpha_spec,
                         const ChainConfig& config) {
  return run_chain(std::make_shared<const MatrixXd>(data), pi, std::move(hyper), alpha_spec,
                   config);
}

struct TraceRow {
  int iter;
  int K;
  double alpha;
  double log_likelihood;
};

inline std::vector<TraceRow> traces(const DrawSet& draws) {
  if (!draws.data) throw validation_error("traces: draw set has no data reference");
  std::vector<TraceRow> rows;
  rows.reserve(draws.draws.size());
  const MatrixXd& data = *draws.data;
  for (const auto& dr : draws.draws) {
    if (dr.clusters.empty()) {
      throw validation_error("traces: draw set lacks recorded cluster parameters");
    }
    double ll = 0.0;
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const auto& c = dr.clusters[static_cast<std::size_t>(dr.allocations[static_cast<std::size_t>(i)])];
      ll += mvn_logpdf(data.row(i).transpose(), c.mu, c.sigma);
    }
    rows.push_back({dr.iter, dr.K, dr.alpha, ll});
  }
  return rows;
}

}  // namespace dpmg
