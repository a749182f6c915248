#ifndef CUREMIX_MCMC_HPP
#define CUREMIX_MCMC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "curemix/types.hpp"

namespace curemix {

struct McmcConfig {
  int chains = 3;
  int iterations = 20000;  // per chain, including burnin
  int burnin = 4000;
  int thin = 0;            // 0 = auto: smallest thin keeping <= 3000 draws per chain
  std::uint64_t seed = 1;
  int adapt_window = 50;       // proposal-scale adaptation block, burnin only
  double target_accept = 0.44;
  double init_coef_sd = 2.0;   // overdispersed start spread for coefficients
  double init_shape_sd = 0.5;  // and for log alpha

  void validate() const {
    if (chains < 2) throw ContractError("McmcConfig: need at least 2 chains for PSRF");
    if (iterations <= burnin || burnin < 0 || thin < 0)
      throw ContractError("McmcConfig: need iterations > burnin >= 0 and thin >= 0");
    if (adapt_window < 1) throw ContractError("McmcConfig: adapt_window must be positive");
  }
};

struct McmcResult {
  // Per chain: kept draws, one row per draw, columns in flat [beta1, beta2,
  // log alpha] order.
  std::vector<Eigen::MatrixXd> draws;
  // Per chain: kept latent draws for the censored subjects, one row per draw,
  // columns following Dataset::censored_indices() order.
  std::vector<Eigen::MatrixXi> censored_z_draws;
  Eigen::VectorXd psrf;               // split-chain PSRF per parameter
  Eigen::VectorXd ess;                // effective sample size per parameter
  Eigen::VectorXd cure_probability;   // per subject, mean of z_i over all kept draws
  Eigen::MatrixXd acceptance_rate;    // chains x parameters, post-burnin
  bool converged = false;             // all PSRF <= 1.1
  int thin_used = 0;
  int kept_per_chain = 0;

  /// All chains' draws stacked row-wise.
  Eigen::MatrixXd pooled() const;
};

/// Metropolis-within-Gibbs reference sampler: exact latent-indicator Gibbs
/// updates alternate with component-wise Gaussian random-walk Metropolis on
/// each coefficient and on log alpha, with acceptance-rate adaptation toward
/// target_accept during burnin only. Chains run concurrently on disjoint
/// seeded streams; results are deterministic given (dataset, config).
McmcResult run_mcmc(const Dataset& d, const PriorSpec& prior, const McmcConfig& cfg);

/// Split-chain potential scale reduction factor, clamped to >= 1. Chains must
/// have equal lengths >= 10; constant pooled input returns exactly 1.
double split_psrf(const std::vector<Eigen::VectorXd>& chains);

/// Effective sample size across chains via the variogram autocorrelation
/// estimate with Geyer pairwise truncation.
double effective_sample_size(const std::vector<Eigen::VectorXd>& chains);

}  // namespace curemix

#endif  // CUREMIX_MCMC_HPP
