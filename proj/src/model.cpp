#include "curemix/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace curemix {

std::string family_name(LatencyFamily fam) {
  return fam == LatencyFamily::weibull_ph ? "weibull-ph" : "weibull-aft";
}

LatencyFamily family_from_name(const std::string& name) {
  if (name == "weibull-ph") return LatencyFamily::weibull_ph;
  if (name == "weibull-aft") return LatencyFamily::weibull_aft;
  throw DataError("unknown latency family '" + name + "' (expected weibull-ph or weibull-aft)");
}

std::vector<int> Dataset::censored_indices() const {
  std::vector<int> idx;
  for (int i = 0; i < n(); ++i)
    if (event[i] == 0) idx.push_back(i);
  return idx;
}

void Dataset::validate() const {
  const int m = n();
  if (event.size() != m || incidence_design.rows() != m || latency_design.rows() != m)
    throw ContractError("Dataset: row counts disagree");
  for (int i = 0; i < m; ++i) {
    if (!(time[i] > 0.0) || !std::isfinite(time[i]))
      throw ContractError("Dataset: times must be finite and positive");
    if (event[i] != 0 && event[i] != 1)
      throw ContractError("Dataset: event indicators must be 0 or 1");
  }
  if (!incidence_design.allFinite() || !latency_design.allFinite())
    throw ContractError("Dataset: non-finite design entries");
  if (p_incidence() < 1 || (incidence_design.col(0).array() != 1.0).any())
    throw ContractError("Dataset: incidence design must start with an all-ones intercept");
}

double log1p_exp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double logistic(double x) {
  double v = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
  if (v >= 1.0) v = std::nextafter(1.0, 0.0);
  if (v <= 0.0) v = std::numeric_limits<double>::min();
  return v;
}

namespace {

void check_dims(const Eigen::VectorXd& beta, const Eigen::VectorXd& x, const char* what) {
  if (beta.size() != x.size())
    throw ContractError(std::string(what) + ": coefficient/covariate dimension mismatch");
}

void check_time(double t) {
  if (!(t > 0.0)) throw std::domain_error("latency functions require t > 0");
}

}  // namespace

double incidence_prob(const Eigen::VectorXd& beta1, const Eigen::VectorXd& x1) {
  check_dims(beta1, x1, "incidence_prob");
  return logistic(beta1.dot(x1));
}

double latency_log_survival(double t, const ParameterPoint& p, const Eigen::VectorXd& x2) {
  check_time(t);
  check_dims(p.latency_coef, x2, "latency_survival");
  const double alpha = p.shape();
  return -std::exp(alpha * std::log(t) + p.latency_coef.dot(x2));
}

double latency_survival(double t, const ParameterPoint& p, const Eigen::VectorXd& x2) {
  return std::exp(latency_log_survival(t, p, x2));
}

double latency_hazard(double t, const ParameterPoint& p, const Eigen::VectorXd& x2) {
  check_time(t);
  check_dims(p.latency_coef, x2, "latency_hazard");
  const double alpha = p.shape();
  return std::exp(p.log_shape + (alpha - 1.0) * std::log(t) + p.latency_coef.dot(x2));
}

double population_survival(double t, const ParameterPoint& p,
                           const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
  const double eta = incidence_prob(p.incidence_coef, x1);
  return eta + (1.0 - eta) * latency_survival(t, p, x2);
}

double incidence_loglik(const Eigen::VectorXd& beta1, const Dataset& d,
                        const LatentAssignment& z) {
  const Eigen::VectorXd u = d.incidence_design * beta1;
  double ll = 0.0;
  for (int i = 0; i < d.n(); ++i)
    ll += z.z[i] * u[i] - log1p_exp(u[i]);  // z log eta + (1-z) log(1-eta)
  return ll;
}

double latency_loglik(const Eigen::VectorXd& beta2, double log_shape,
                      const Dataset& d, const LatentAssignment& z) {
  const double alpha = std::exp(log_shape);
  const Eigen::VectorXd g = d.latency_design * beta2;
  double ll = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    if (z.z[i] == 1) continue;
    const double log_t = std::log(d.time[i]);
    const double cum_hazard = std::exp(alpha * log_t + g[i]);  // t^alpha e^g
    if (d.event[i] == 1) ll += log_shape + (alpha - 1.0) * log_t + g[i];
    ll -= cum_hazard;
  }
  return ll;
}

double complete_loglik(const ParameterPoint& p, const Dataset& d,
                       const LatentAssignment& z) {
  z.validate(d);
  if (p.incidence_coef.size() != d.p_incidence() || p.latency_coef.size() != d.p_latency())
    throw ContractError("complete_loglik: parameter/design dimension mismatch");
  return incidence_loglik(p.incidence_coef, d, z) +
         latency_loglik(p.latency_coef, p.log_shape, d, z);
}

double log_prior(const ParameterPoint& p, const PriorSpec& prior) {
  prior.validate();
  const double v = prior.coef_variance;
  const double a = prior.shape_a;
  const double b = prior.shape_b;
  double lp = 0.0;
  const double norm_const = -0.5 * std::log(2.0 * M_PI * v);
  for (int j = 0; j < p.incidence_coef.size(); ++j)
    lp += norm_const - p.incidence_coef[j] * p.incidence_coef[j] / (2.0 * v);
  for (int j = 0; j < p.latency_coef.size(); ++j)
    lp += norm_const - p.latency_coef[j] * p.latency_coef[j] / (2.0 * v);
  // Gamma(a, b) on alpha with the log-transform Jacobian folded in:
  // a log b - lgamma(a) + a psi - b e^psi, psi = log alpha
  lp += a * std::log(b) - std::lgamma(a) + a * p.log_shape - b * std::exp(p.log_shape);
  return lp;
}

double log_posterior(const ParameterPoint& p, const Dataset& d,
                     const LatentAssignment& z, const PriorSpec& prior) {
  return complete_loglik(p, d, z) + log_prior(p, prior);
}

GradHess log_posterior_grad_hess(const ParameterPoint& p, const Dataset& d,
                                 const LatentAssignment& z, const PriorSpec& prior) {
  z.validate(d);
  prior.validate();
  const int p1 = d.p_incidence();
  const int p2 = d.p_latency();
  if (p.incidence_coef.size() != p1 || p.latency_coef.size() != p2)
    throw ContractError("log_posterior_grad_hess: parameter/design dimension mismatch");
  const int dim = p1 + p2 + 1;

  GradHess out;
  out.gradient = Eigen::VectorXd::Zero(dim);
  out.hessian = Eigen::MatrixXd::Zero(dim, dim);

  const double v = prior.coef_variance;
  const double a = prior.shape_a;
  const double b = prior.shape_b;
  const double alpha = p.shape();
  const double norm_const = -0.5 * std::log(2.0 * M_PI * v);

  double value = 0.0;

  // incidence block
  const Eigen::VectorXd u = d.incidence_design * p.incidence_coef;
  for (int i = 0; i < d.n(); ++i) {
    const double eta = logistic(u[i]);
    value += z.z[i] * u[i] - log1p_exp(u[i]);
    out.gradient.head(p1) += (z.z[i] - eta) * d.incidence_design.row(i).transpose();
    out.hessian.topLeftCorner(p1, p1) -=
        eta * (1.0 - eta) * d.incidence_design.row(i).transpose() * d.incidence_design.row(i);
  }

  // latency block over (beta2, log alpha)
  const Eigen::VectorXd g = d.latency_design * p.latency_coef;
  const int ip = p1 + p2;  // flat index of log alpha
  for (int i = 0; i < d.n(); ++i) {
    if (z.z[i] == 1) continue;
    const double log_t = std::log(d.time[i]);
    const double al = alpha * log_t;
    const double cum = std::exp(al + g[i]);  // t^alpha e^g
    const int delta = d.event[i];
    if (delta == 1) value += p.log_shape + (alpha - 1.0) * log_t + g[i];
    value -= cum;
    const Eigen::VectorXd x2 = d.latency_design.row(i).transpose();
    out.gradient.segment(p1, p2) += (delta - cum) * x2;
    out.gradient[ip] += delta * (1.0 + al) - cum * al;
    out.hessian.block(p1, p1, p2, p2) -= cum * x2 * x2.transpose();
    out.hessian.block(p1, ip, p2, 1) -= cum * al * x2;
    out.hessian(ip, ip) += delta * al - cum * al * (1.0 + al);
  }
  out.hessian.block(ip, p1, 1, p2) = out.hessian.block(p1, ip, p2, 1).transpose();

  // priors
  for (int j = 0; j < p1; ++j) {
    value += norm_const - p.incidence_coef[j] * p.incidence_coef[j] / (2.0 * v);
    out.gradient[j] -= p.incidence_coef[j] / v;
    out.hessian(j, j) -= 1.0 / v;
  }
  for (int j = 0; j < p2; ++j) {
    value += norm_const - p.latency_coef[j] * p.latency_coef[j] / (2.0 * v);
    out.gradient[p1 + j] -= p.latency_coef[j] / v;
    out.hessian(p1 + j, p1 + j) -= 1.0 / v;
  }
  value += a * std::log(b) - std::lgamma(a) + a * p.log_shape - b * alpha;
  out.gradient[ip] += a - b * alpha;
  out.hessian(ip, ip) -= b * alpha;

  out.value = value;
  return out;
}

}  // namespace curemix
