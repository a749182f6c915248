#ifndef CUREMIX_GIBBS_HPP
#define CUREMIX_GIBBS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "curemix/laplace.hpp"

namespace curemix {

struct GibbsConfig {
  int burnin = 50;
  int keep = 90;
  int thin = 5;
  std::uint64_t seed = 1;
  int grid_size = 15;            // log-shape grid points per conditional fit
  double init_cure_prob = 0.5;   // Bernoulli parameter for the initial censored z
  LaplaceOptions laplace;        // grid_size above overrides laplace.grid_size

  void validate() const {
    if (burnin < 0 || keep < 1 || thin < 1)
      throw ContractError("GibbsConfig: need burnin >= 0, keep >= 1, thin >= 1");
    if (grid_size < 3 || grid_size % 2 == 0)
      throw ContractError("GibbsConfig: grid_size must be odd and at least 3");
    if (!(init_cure_prob >= 0.0 && init_cure_prob <= 1.0))
      throw ContractError("GibbsConfig: init_cure_prob must lie in [0, 1]");
  }
};

/// One kept draw: the latent assignment and the fit conditioned on it.
struct KeptSample {
  LatentAssignment z;
  std::shared_ptr<const ConditionalFit> fit;
};

struct Chain {
  std::vector<KeptSample> kept;
  std::vector<double> cml_trace;      // one conditional log marginal per iteration
  Eigen::VectorXd cure_probability;   // per subject, mean of z_i over kept samples
  int most_likely_index = -1;         // kept index with the largest cml (earliest on ties)
  int rejected_iterations = 0;        // iterations resampled after fit failures
  GibbsConfig config;
  int p_incidence = 0;
  int p_latency = 0;
};

/// Probability that a censored subject is susceptible (z = 0) given the cure
/// probability eta and its uncured survival at the censoring time:
/// (1 - eta) * su / (eta + (1 - eta) * su). Throws on an uncensored subject.
double susceptible_probability(int event, double eta, double latency_surv);

/// Alternates conditional Laplace fits with sampling of the censored latent
/// indicators from their full conditional evaluated at the conditional modes.
/// Deterministic given (dataset, config). Requires at least one censored
/// subject; throws ChainError after more than 10 consecutive rejected
/// iterations.
Chain run_chain(const Dataset& d, const PriorSpec& prior, const GibbsConfig& cfg);

/// Equal-weight averages of the kept samples' conditional marginals.
struct AveragedPosterior {
  std::vector<std::shared_ptr<const Marginal>> coef;  // flat order [beta1, beta2]
  std::shared_ptr<const Marginal> shape;              // alpha
  std::shared_ptr<const Marginal> log_shape;
};

AveragedPosterior average_marginals(const Chain& chain);

struct ConvergenceReport {
  bool converged = false;
  double window_range = 0.0;  // max - min of the trace window, nats
  double window_slope = 0.0;  // least-squares slope, nats per iteration
  int window_begin = 0;       // window is [window_begin, trace end)
};

/// Stability rule on the conditional-log-marginal trace: the last quarter of
/// the trace must have range < 3 nats and |slope| < 0.01 nats/iteration.
/// Traces shorter than 20 iterations are reported as not converged.
ConvergenceReport assess_convergence(const std::vector<double>& trace);

/// A named covariate profile (design rows including any intercepts).
struct CovariateProfile {
  std::string name;
  Eigen::VectorXd incidence_row;
  Eigen::VectorXd latency_row;
};

struct CureEstimate {
  std::string profile;
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct SurvivalCurve {
  std::string profile;
  std::vector<double> time;
  std::vector<double> mean_survival;  // pointwise posterior mean of S_u
};

struct DerivedQuantities {
  std::vector<CureEstimate> cure;
  std::vector<SurvivalCurve> survival;
};

/// Posterior summaries of the cure proportion per profile and pointwise mean
/// uncured survival curves, from joint draws out of the most likely kept
/// configuration's Laplace approximation (or, with average_all_configs, from
/// a uniformly chosen kept configuration per draw).
DerivedQuantities derived_quantities(const Chain& chain,
                                     const std::vector<CovariateProfile>& profiles,
                                     const std::vector<double>& time_grid,
                                     int n_draws = 1000, std::uint64_t seed = 1,
                                     bool average_all_configs = false);

}  // namespace curemix

#endif  // CUREMIX_GIBBS_HPP
