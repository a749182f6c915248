#ifndef CUREMIX_TYPES_HPP
#define CUREMIX_TYPES_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "curemix/errors.hpp"

namespace curemix {

/// Latency family. Both families share the Weibull hazard
/// alpha * t^(alpha-1) * exp(beta2'x2); the tag controls design-matrix
/// conventions and reporting (exp{b0_2} for PH, sigma = 1/alpha for AFT).
enum class LatencyFamily { weibull_ph, weibull_aft };

std::string family_name(LatencyFamily fam);
LatencyFamily family_from_name(const std::string& name);

/// Independent N(0, v) priors on every regression coefficient and a
/// Gamma(a, b) prior on the Weibull shape alpha.
struct PriorSpec {
  double coef_variance = 1000.0;
  double shape_a = 0.01;
  double shape_b = 0.01;

  void validate() const {
    if (!(coef_variance > 0.0) || !(shape_a > 0.0) || !(shape_b > 0.0))
      throw ContractError("PriorSpec: coef_variance, shape_a, shape_b must be positive");
  }
};

/// Observed survival data plus the incidence/latency design matrices.
/// Column 0 of incidence_design is always an all-ones intercept; the latency
/// design carries an intercept column unless it was explicitly dropped.
struct Dataset {
  Eigen::VectorXd time;                 // t_i > 0
  Eigen::VectorXi event;                // 1 = event observed, 0 = right-censored
  Eigen::MatrixXd incidence_design;     // n x p1
  Eigen::MatrixXd latency_design;       // n x p2
  std::vector<std::string> incidence_names;
  std::vector<std::string> latency_names;
  LatencyFamily family = LatencyFamily::weibull_ph;

  // raw file content (uncentered), kept for round-trip writes
  std::vector<std::string> column_names;
  std::vector<Eigen::VectorXd> columns;

  std::map<std::string, double> centering_means;  // name -> subtracted sample mean
  std::vector<std::string> warnings;

  int n() const { return static_cast<int>(time.size()); }
  int n_censored() const { return n() - n_uncensored(); }
  int n_uncensored() const { return static_cast<int>(event.cast<double>().sum()); }
  int p_incidence() const { return static_cast<int>(incidence_design.cols()); }
  int p_latency() const { return static_cast<int>(latency_design.cols()); }

  /// Indices of censored subjects in increasing row order.
  std::vector<int> censored_indices() const;

  void validate() const;  // throws ContractError on inconsistent content
};

/// Latent cure indicators; z_i = 1 flags a cured subject. Uncensored subjects
/// are always susceptible, so z_i = 0 wherever event_i = 1.
struct LatentAssignment {
  Eigen::VectorXi z;

  void validate(const Dataset& d) const {
    if (z.size() != d.time.size())
      throw ContractError("LatentAssignment: length does not match dataset");
    for (int i = 0; i < z.size(); ++i) {
      if (z[i] != 0 && z[i] != 1)
        throw ContractError("LatentAssignment: entries must be 0 or 1");
      if (d.event[i] == 1 && z[i] != 0)
        throw ContractError("LatentAssignment: cured flag set on an uncensored subject");
    }
  }

  static LatentAssignment all_susceptible(const Dataset& d) {
    LatentAssignment a;
    a.z = Eigen::VectorXi::Zero(d.n());
    return a;
  }
};

/// One point in parameter space. The Weibull shape is stored as log(alpha) so
/// optimization runs on an unconstrained space; sigma = 1/alpha for AFT.
struct ParameterPoint {
  Eigen::VectorXd incidence_coef;  // beta1
  Eigen::VectorXd latency_coef;    // beta2
  double log_shape = 0.0;

  double shape() const { return std::exp(log_shape); }
  int dim() const {
    return static_cast<int>(incidence_coef.size() + latency_coef.size()) + 1;
  }

  /// Flat layout: [beta1, beta2, log_shape].
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd v(dim());
    v << incidence_coef, latency_coef, log_shape;
    return v;
  }

  static ParameterPoint from_flat(const Eigen::VectorXd& v, int p1, int p2) {
    if (v.size() != p1 + p2 + 1)
      throw ContractError("ParameterPoint: flat vector has wrong length");
    ParameterPoint p;
    p.incidence_coef = v.head(p1);
    p.latency_coef = v.segment(p1, p2);
    p.log_shape = v[p1 + p2];
    return p;
  }

  static ParameterPoint zeros(int p1, int p2) {
    ParameterPoint p;
    p.incidence_coef = Eigen::VectorXd::Zero(p1);
    p.latency_coef = Eigen::VectorXd::Zero(p2);
    p.log_shape = 0.0;
    return p;
  }
};

}  // namespace curemix

#endif  // CUREMIX_TYPES_HPP
