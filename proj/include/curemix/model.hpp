#ifndef CUREMIX_MODEL_HPP
#define CUREMIX_MODEL_HPP

#include <Eigen/Dense>

#include "curemix/types.hpp"

namespace curemix {

/// log(1 + exp(x)) without overflow for any finite x.
double log1p_exp(double x);

/// log(sum(exp(v))) with max shifting; -inf for an empty input.
double log_sum_exp(const std::vector<double>& v);

/// Logistic function clamped into the open interval (0, 1).
double logistic(double x);

/// Cure probability eta = logistic(beta1'x1). Stable for |beta1'x1| up to 700.
double incidence_prob(const Eigen::VectorXd& beta1, const Eigen::VectorXd& x1);

/// Uncured survival S_u(t) = exp(-t^alpha * exp(beta2'x2)), t > 0.
double latency_survival(double t, const ParameterPoint& p, const Eigen::VectorXd& x2);

/// log S_u(t), computed directly as -t^alpha * exp(beta2'x2).
double latency_log_survival(double t, const ParameterPoint& p, const Eigen::VectorXd& x2);

/// Uncured hazard h_u(t) = alpha * t^(alpha-1) * exp(beta2'x2), t > 0.
double latency_hazard(double t, const ParameterPoint& p, const Eigen::VectorXd& x2);

/// Population survival eta + (1 - eta) * S_u(t); improper, plateaus at eta.
double population_survival(double t, const ParameterPoint& p,
                           const Eigen::VectorXd& x1, const Eigen::VectorXd& x2);

/// Incidence block of the complete-data log-likelihood:
/// sum_i z_i log eta_i + (1 - z_i) log(1 - eta_i).
double incidence_loglik(const Eigen::VectorXd& beta1, const Dataset& d,
                        const LatentAssignment& z);

/// Latency block: sum_i (1 - z_i) [delta_i log h_u(t_i) + log S_u(t_i)].
double latency_loglik(const Eigen::VectorXd& beta2, double log_shape,
                      const Dataset& d, const LatentAssignment& z);

/// Complete-data log-likelihood (incidence block + latency block).
double complete_loglik(const ParameterPoint& p, const Dataset& d,
                       const LatentAssignment& z);

/// Log prior density over (beta1, beta2, log alpha); the log-alpha coordinate
/// carries the Jacobian of the log transform applied to the Gamma prior.
double log_prior(const ParameterPoint& p, const PriorSpec& prior);

/// complete_loglik + log_prior.
double log_posterior(const ParameterPoint& p, const Dataset& d,
                     const LatentAssignment& z, const PriorSpec& prior);

struct GradHess {
  double value = 0.0;
  Eigen::VectorXd gradient;  // over [beta1, beta2, log alpha]
  Eigen::MatrixXd hessian;
};

/// Value, analytic gradient and Hessian of the complete-data log-posterior.
GradHess log_posterior_grad_hess(const ParameterPoint& p, const Dataset& d,
                                 const LatentAssignment& z, const PriorSpec& prior);

}  // namespace curemix

#endif  // CUREMIX_MODEL_HPP
