#ifndef CUREMIX_ORACLE_HPP
#define CUREMIX_ORACLE_HPP

#include <memory>
#include <string>
#include <vector>

#include "curemix/marginal.hpp"
#include "curemix/types.hpp"

namespace curemix {

struct QuadratureSpec {
  int points_per_dim = 161;  // odd keeps the pilot mode on the grid
  double span_sd = 8.0;      // half-width per dimension, in pilot-fit sd units
  double shift_steps = 0.0;  // translate every grid by this fraction of a step

  void validate() const {
    if (points_per_dim < 9) throw ContractError("QuadratureSpec: need at least 9 points");
    if (!(span_sd > 0.0)) throw ContractError("QuadratureSpec: span must be positive");
  }
};

/// Exact (to quadrature accuracy) posterior on a tiny instance, obtained by
/// enumerating every censored-latent configuration and integrating the
/// parameters over a dense tensor grid.
struct OracleResult {
  // Configurations in binary counting order over censored subjects (bit c of
  // the index is z at censored_indices()[c]); the uncensored entries are 0.
  std::vector<LatentAssignment> configurations;
  Eigen::VectorXd config_probability;      // sums to 1 within 1e-12
  std::vector<double> config_log_evidence; // log of the joint data/configuration mass
  double log_evidence = 0.0;               // log-sum over configurations

  std::vector<std::shared_ptr<const Marginal>> coef_marginals;  // flat order
  std::shared_ptr<const Marginal> shape_marginal;               // alpha
  std::shared_ptr<const Marginal> log_shape_marginal;
  std::vector<std::string> warnings;  // boundary-mass accuracy notes
};

/// Brute-force enumeration + tensor-trapezoid quadrature. Declined (DataError)
/// when the parameter dimension exceeds 4 or the censored count exceeds 12.
OracleResult enumerate_posterior(const Dataset& d, const PriorSpec& prior,
                                 const QuadratureSpec& quad = {});

}  // namespace curemix

#endif  // CUREMIX_ORACLE_HPP
