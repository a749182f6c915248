#include "curemix/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "curemix/laplace.hpp"

namespace curemix {

namespace {

// The oracle evaluates every density from first principles rather than
// calling the model-core implementations, so a defect there cannot silently
// cancel out of oracle comparisons. Only grid *placement* reuses find_mode.

double stable_log1pexp(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct Axis {
  std::vector<double> points;
  std::vector<double> log_w;  // trapezoid log-weights, one per point
  double step = 0.0;
};

Axis make_axis(double lo, double hi, int count, double shift_steps) {
  Axis axis;
  axis.step = (hi - lo) / (count - 1);
  axis.points.resize(count);
  axis.log_w.resize(count);
  for (int i = 0; i < count; ++i) {
    axis.points[i] = lo + (i + shift_steps) * axis.step;
    axis.log_w[i] = std::log(axis.step) + (i == 0 || i == count - 1 ? std::log(0.5) : 0.0);
  }
  return axis;
}

/// Row-major walk over a tensor grid of `bdim` axes with `count` points each;
/// the first axis varies fastest. Calls visit(node, indices).
template <typename Visitor>
void for_each_node(long total, int bdim, int count, Visitor&& visit) {
  std::vector<int> idx(bdim, 0);
  for (long node = 0; node < total; ++node) {
    visit(node, idx);
    for (int b = 0; b < bdim; ++b) {
      if (++idx[b] < count) break;
      idx[b] = 0;
    }
  }
}

double logsumexp_shifted(const std::vector<double>& values) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : values) m = std::max(m, v);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

OracleResult enumerate_posterior(const Dataset& d, const PriorSpec& prior,
                                 const QuadratureSpec& quad) {
  d.validate();
  prior.validate();
  quad.validate();
  const int p1 = d.p_incidence();
  const int p2 = d.p_latency();
  const int dim = p1 + p2 + 1;
  const int n_cen = d.n_censored();
  if (dim > 4)
    throw DataError("oracle declined: " + std::to_string(dim) +
                    " parameters exceed the 4-dimension tensor-quadrature limit");
  if (n_cen > 12)
    throw DataError("oracle declined: " + std::to_string(n_cen) +
                    " censored subjects exceed the 2^12 enumeration limit");

  const int count = quad.points_per_dim;
  const int inc_dim = p1;
  const int lat_dim = p2 + 1;
  const long n_inc = static_cast<long>(std::lround(std::pow(count, inc_dim)));
  const long n_lat = static_cast<long>(std::lround(std::pow(count, lat_dim)));
  if (static_cast<double>(n_inc + n_lat) * (n_cen + 2) > 4e7)
    throw DataError("oracle quadrature grid is too large; reduce points_per_dim");

  // Grid placement: bracket the two extreme latent configurations.
  LatentAssignment z_all_susceptible = LatentAssignment::all_susceptible(d);
  LatentAssignment z_all_cured = z_all_susceptible;
  const std::vector<int> censored = d.censored_indices();
  for (int i : censored) z_all_cured.z[i] = 1;
  const ModeFit pilot_a = find_mode(d, z_all_susceptible, prior);
  const ModeFit pilot_b = find_mode(d, z_all_cured, prior);

  std::vector<Axis> axes(dim);
  {
    const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::MatrixXd cov_a = pilot_a.neg_hessian.llt().solve(identity);
    const Eigen::MatrixXd cov_b = pilot_b.neg_hessian.llt().solve(identity);
    const Eigen::VectorXd mode_a = pilot_a.mode.flatten();
    const Eigen::VectorXd mode_b = pilot_b.mode.flatten();
    for (int k = 0; k < dim; ++k) {
      const double sd_a = std::sqrt(std::max(cov_a(k, k), 1e-12));
      const double sd_b = std::sqrt(std::max(cov_b(k, k), 1e-12));
      const double lo =
          std::min(mode_a[k] - quad.span_sd * sd_a, mode_b[k] - quad.span_sd * sd_b);
      const double hi =
          std::max(mode_a[k] + quad.span_sd * sd_a, mode_b[k] + quad.span_sd * sd_b);
      axes[k] = make_axis(lo, hi, count, quad.shift_steps);
    }
  }

  const double v = prior.coef_variance;
  const double coef_prior_const = -0.5 * std::log(2.0 * M_PI * v);
  const double shape_prior_const =
      prior.shape_a * std::log(prior.shape_b) - std::lgamma(prior.shape_a);

  // Incidence block: cell values that do not depend on z, plus the per-node
  // linear predictor of each censored subject (added when that subject is
  // cured in a configuration).
  std::vector<double> base_inc(n_inc, 0.0), logw_inc(n_inc, 0.0);
  std::vector<std::vector<double>> u_cen(n_cen, std::vector<double>(n_inc, 0.0));
  for_each_node(n_inc, inc_dim, count, [&](long node, const std::vector<int>& idx) {
    double value = 0.0, logw = 0.0;
    for (int b = 0; b < inc_dim; ++b) {
      const double beta = axes[b].points[idx[b]];
      value += coef_prior_const - beta * beta / (2.0 * v);
      logw += axes[b].log_w[idx[b]];
    }
    for (int i = 0; i < d.n(); ++i) {
      double u = 0.0;
      for (int b = 0; b < inc_dim; ++b)
        u += d.incidence_design(i, b) * axes[b].points[idx[b]];
      value -= stable_log1pexp(u);
    }
    for (int c = 0; c < n_cen; ++c) {
      double u = 0.0;
      for (int b = 0; b < inc_dim; ++b)
        u += d.incidence_design(censored[c], b) * axes[b].points[idx[b]];
      u_cen[c][node] = u;
    }
    base_inc[node] = value;
    logw_inc[node] = logw;
  });

  // Latency block over (beta2, log alpha): uncensored subjects and priors in
  // the base; each censored subject's cumulative hazard stored separately
  // (subtracted when that subject is susceptible in a configuration).
  std::vector<double> base_lat(n_lat, 0.0), logw_lat(n_lat, 0.0);
  std::vector<std::vector<double>> a_cen(n_cen, std::vector<double>(n_lat, 0.0));
  for_each_node(n_lat, lat_dim, count, [&](long node, const std::vector<int>& idx) {
    const double psi = axes[p1 + p2].points[idx[lat_dim - 1]];
    const double alpha = std::exp(psi);
    double value = shape_prior_const + prior.shape_a * psi - prior.shape_b * alpha;
    double logw = axes[p1 + p2].log_w[idx[lat_dim - 1]];
    for (int b = 0; b < p2; ++b) {
      const double beta = axes[p1 + b].points[idx[b]];
      value += coef_prior_const - beta * beta / (2.0 * v);
      logw += axes[p1 + b].log_w[idx[b]];
    }
    for (int i = 0; i < d.n(); ++i) {
      double g = 0.0;
      for (int b = 0; b < p2; ++b) g += d.latency_design(i, b) * axes[p1 + b].points[idx[b]];
      const double log_t = std::log(d.time[i]);
      if (d.event[i] == 1)
        value += psi + (alpha - 1.0) * log_t + g - std::exp(alpha * log_t + g);
    }
    for (int c = 0; c < n_cen; ++c) {
      const int i = censored[c];
      double g = 0.0;
      for (int b = 0; b < p2; ++b) g += d.latency_design(i, b) * axes[p1 + b].points[idx[b]];
      a_cen[c][node] = std::exp(alpha * std::log(d.time[i]) + g);
    }
    base_lat[node] = value;
    logw_lat[node] = logw;
  });

  // Pass 1: per-configuration evidence by trapezoid log-sum-exp per block.
  const long n_config = 1L << n_cen;
  OracleResult result;
  result.configurations.reserve(n_config);
  result.config_log_evidence.resize(n_config);
  std::vector<double> inc_ev(n_config), lat_ev(n_config);
  std::vector<double> inc_peak(n_config), lat_peak(n_config);  // max raw cell values
  std::vector<double> scratch(std::max(n_inc, n_lat));
  for (long cfg = 0; cfg < n_config; ++cfg) {
    LatentAssignment z = z_all_susceptible;
    for (int c = 0; c < n_cen; ++c)
      if (cfg & (1L << c)) z.z[censored[c]] = 1;
    result.configurations.push_back(z);

    double peak = -std::numeric_limits<double>::infinity();
    scratch.assign(n_inc, 0.0);
    for (long node = 0; node < n_inc; ++node) {
      double value = base_inc[node];
      for (int c = 0; c < n_cen; ++c)
        if (cfg & (1L << c)) value += u_cen[c][node];
      peak = std::max(peak, value);
      scratch[node] = value + logw_inc[node];
    }
    inc_ev[cfg] = logsumexp_shifted(scratch);
    inc_peak[cfg] = peak;

    peak = -std::numeric_limits<double>::infinity();
    scratch.assign(n_lat, 0.0);
    for (long node = 0; node < n_lat; ++node) {
      double value = base_lat[node];
      for (int c = 0; c < n_cen; ++c)
        if (!(cfg & (1L << c))) value -= a_cen[c][node];
      peak = std::max(peak, value);
      scratch[node] = value + logw_lat[node];
    }
    lat_ev[cfg] = logsumexp_shifted(scratch);
    lat_peak[cfg] = peak;

    result.config_log_evidence[cfg] = inc_ev[cfg] + lat_ev[cfg];
  }
  result.log_evidence = logsumexp_shifted(result.config_log_evidence);
  result.config_probability.resize(n_config);
  for (long cfg = 0; cfg < n_config; ++cfg)
    result.config_probability[cfg] =
        std::exp(result.config_log_evidence[cfg] - result.log_evidence);
  result.config_probability /= result.config_probability.sum();

  // Pass 2: accumulate the configuration-mixed posterior density per block.
  double shift_inc = -std::numeric_limits<double>::infinity();
  double shift_lat = -std::numeric_limits<double>::infinity();
  for (long cfg = 0; cfg < n_config; ++cfg) {
    shift_inc = std::max(shift_inc, lat_ev[cfg] + inc_peak[cfg]);
    shift_lat = std::max(shift_lat, inc_ev[cfg] + lat_peak[cfg]);
  }
  std::vector<double> post_inc(n_inc, 0.0), post_lat(n_lat, 0.0);
  for (long cfg = 0; cfg < n_config; ++cfg) {
    for (long node = 0; node < n_inc; ++node) {
      double value = base_inc[node];
      for (int c = 0; c < n_cen; ++c)
        if (cfg & (1L << c)) value += u_cen[c][node];
      post_inc[node] += std::exp(lat_ev[cfg] + value - shift_inc);
    }
    for (long node = 0; node < n_lat; ++node) {
      double value = base_lat[node];
      for (int c = 0; c < n_cen; ++c)
        if (!(cfg & (1L << c))) value -= a_cen[c][node];
      post_lat[node] += std::exp(inc_ev[cfg] + value - shift_lat);
    }
  }

  // 1-D marginals: integrate the block density over the other axes.
  std::vector<std::vector<double>> marginal(dim);
  for (int k = 0; k < dim; ++k) marginal[k].assign(count, 0.0);
  for_each_node(n_inc, inc_dim, count, [&](long node, const std::vector<int>& idx) {
    for (int b = 0; b < inc_dim; ++b)
      marginal[b][idx[b]] +=
          post_inc[node] * std::exp(logw_inc[node] - axes[b].log_w[idx[b]]);
  });
  for_each_node(n_lat, lat_dim, count, [&](long node, const std::vector<int>& idx) {
    for (int b = 0; b < lat_dim; ++b)
      marginal[p1 + b][idx[b]] +=
          post_lat[node] * std::exp(logw_lat[node] - axes[p1 + b].log_w[idx[b]]);
  });

  const auto dim_name = [&](int k) -> std::string {
    if (k < p1) return "incidence." + d.incidence_names[k];
    if (k < p1 + p2) return "latency." + d.latency_names[k - p1];
    return "log shape";
  };
  result.coef_marginals.reserve(p1 + p2);
  for (int k = 0; k < dim; ++k) {
    auto density = std::make_shared<GridDensity>(axes[k].points, marginal[k]);
    const double clipped =
        (density->pdf(axes[k].points.front()) + density->pdf(axes[k].points.back())) *
        axes[k].step;
    if (clipped > 1e-10) {
      char note[160];
      std::snprintf(note, sizeof(note),
                    "about %.1e of the %s posterior mass lies outside the quadrature grid",
                    clipped, dim_name(k).c_str());
      result.warnings.push_back(note);
    }
    if (k < p1 + p2) {
      result.coef_marginals.push_back(std::move(density));
    } else {
      result.log_shape_marginal = std::move(density);
      std::vector<double> alpha_points(count), alpha_dens(count);
      for (int i = 0; i < count; ++i) {
        alpha_points[i] = std::exp(axes[k].points[i]);
        alpha_dens[i] = marginal[k][i] / alpha_points[i];
      }
      result.shape_marginal =
          std::make_shared<GridDensity>(std::move(alpha_points), std::move(alpha_dens));
    }
  }
  return result;
}

}  // namespace curemix
