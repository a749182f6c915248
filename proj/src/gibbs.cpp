#include "curemix/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "curemix/rng.hpp"

namespace curemix {

double susceptible_probability(int event, double eta, double latency_surv) {
  if (event != 0)
    throw ContractError("susceptible_probability: subject is uncensored, z is pinned to 0");
  if (!(eta > 0.0 && eta < 1.0))
    throw ContractError("susceptible_probability: eta must lie strictly in (0, 1)");
  if (!(latency_surv >= 0.0 && latency_surv <= 1.0))
    throw ContractError("susceptible_probability: survival must lie in [0, 1]");
  return (1.0 - eta) * latency_surv / (eta + (1.0 - eta) * latency_surv);
}

namespace {

std::vector<char> censored_key(const LatentAssignment& z, const std::vector<int>& censored) {
  std::vector<char> key(censored.size());
  for (std::size_t c = 0; c < censored.size(); ++c)
    key[c] = static_cast<char>(z.z[censored[c]]);
  return key;
}

}  // namespace

Chain run_chain(const Dataset& d, const PriorSpec& prior, const GibbsConfig& cfg) {
  d.validate();
  cfg.validate();
  prior.validate();
  if (d.n_censored() == 0)
    throw DataError(
        "dataset has no censored subjects, so the cured fraction is unidentifiable; "
        "fit a plain survival model instead");

  const std::vector<int> censored = d.censored_indices();
  LaplaceOptions laplace = cfg.laplace;
  laplace.grid_size = cfg.grid_size;
  Rng rng(Rng::mix(cfg.seed));

  Chain chain;
  chain.config = cfg;
  chain.p_incidence = d.p_incidence();
  chain.p_latency = d.p_latency();
  const int total_iterations = cfg.burnin + cfg.keep * cfg.thin;
  chain.cml_trace.reserve(total_iterations);
  chain.kept.reserve(cfg.keep);

  LatentAssignment z = LatentAssignment::all_susceptible(d);
  for (int i : censored) z.z[i] = rng.bernoulli(cfg.init_cure_prob);

  // Fits depend on z alone, so repeated configurations reuse one fit.
  std::map<std::vector<char>, std::shared_ptr<const ConditionalFit>> fit_cache;
  constexpr std::size_t kMaxCachedFits = 4096;

  std::shared_ptr<const ConditionalFit> last_fit;
  ParameterPoint previous_mode;
  bool have_previous = false;
  int consecutive_failures = 0;

  const auto resample_censored = [&](const std::shared_ptr<const ConditionalFit>& from) {
    for (int i : censored) {
      if (from) {
        const ParameterPoint& mode = from->joint.mode;
        const double eta =
            incidence_prob(mode.incidence_coef, d.incidence_design.row(i).transpose());
        const double surv =
            latency_survival(d.time[i], mode, d.latency_design.row(i).transpose());
        z.z[i] = rng.bernoulli(1.0 - susceptible_probability(0, eta, surv));
      } else {
        z.z[i] = rng.bernoulli(cfg.init_cure_prob);
      }
    }
  };

  for (int iteration = 1; iteration <= total_iterations;) {
    std::shared_ptr<const ConditionalFit> fit;
    const auto key = censored_key(z, censored);
    if (const auto it = fit_cache.find(key); it != fit_cache.end()) {
      fit = it->second;
    } else {
      // On failure retry from the previous mode's surroundings, then cold.
      try {
        fit = std::make_shared<const ConditionalFit>(
            fit_conditional(d, z, prior, laplace, have_previous ? &previous_mode : nullptr));
      } catch (const std::runtime_error&) {
        try {
          fit = std::make_shared<const ConditionalFit>(fit_conditional(d, z, prior, laplace));
        } catch (const std::runtime_error& err) {
          ++chain.rejected_iterations;
          if (++consecutive_failures > 10)
            throw ChainError(std::string("10 consecutive conditional fits failed; last: ") +
                                 err.what(),
                             iteration);
          resample_censored(last_fit);
          continue;  // iteration rejected, not counted
        }
      }
      if (fit_cache.size() < kMaxCachedFits) fit_cache.emplace(key, fit);
    }
    consecutive_failures = 0;

    chain.cml_trace.push_back(fit->log_marginal);
    if (iteration > cfg.burnin && (iteration - cfg.burnin) % cfg.thin == 0)
      chain.kept.push_back({z, fit});

    previous_mode = fit->joint.mode;
    have_previous = true;
    last_fit = fit;
    resample_censored(fit);
    ++iteration;
  }

  chain.cure_probability = Eigen::VectorXd::Zero(d.n());
  for (const auto& sample : chain.kept)
    chain.cure_probability += sample.z.z.cast<double>();
  chain.cure_probability /= static_cast<double>(chain.kept.size());

  chain.most_likely_index = 0;
  for (int k = 1; k < static_cast<int>(chain.kept.size()); ++k)
    if (chain.kept[k].fit->log_marginal >
        chain.kept[chain.most_likely_index].fit->log_marginal)
      chain.most_likely_index = k;
  return chain;
}

AveragedPosterior average_marginals(const Chain& chain) {
  if (chain.kept.empty())
    throw ContractError("average_marginals: chain holds no kept samples");
  AveragedPosterior post;
  const int nc = chain.p_incidence + chain.p_latency;
  post.coef.reserve(nc);
  for (int j = 0; j < nc; ++j) {
    std::vector<std::shared_ptr<const Marginal>> parts;
    parts.reserve(chain.kept.size());
    for (const auto& sample : chain.kept) parts.push_back(sample.fit->coef_marginal(j));
    post.coef.push_back(std::make_shared<AveragedMarginal>(std::move(parts)));
  }
  std::vector<std::shared_ptr<const Marginal>> shapes, log_shapes;
  shapes.reserve(chain.kept.size());
  log_shapes.reserve(chain.kept.size());
  for (const auto& sample : chain.kept) {
    shapes.push_back(sample.fit->shape_marginal());
    log_shapes.push_back(sample.fit->log_shape_marginal());
  }
  post.shape = std::make_shared<AveragedMarginal>(std::move(shapes));
  post.log_shape = std::make_shared<AveragedMarginal>(std::move(log_shapes));
  return post;
}

ConvergenceReport assess_convergence(const std::vector<double>& trace) {
  ConvergenceReport report;
  const int n = static_cast<int>(trace.size());
  if (n < 20) return report;  // too short to judge; reported as not converged

  report.window_begin = n - n / 4;
  const int len = n - report.window_begin;
  double lo = trace[report.window_begin], hi = lo;
  double sum_y = 0.0;
  for (int i = report.window_begin; i < n; ++i) {
    lo = std::min(lo, trace[i]);
    hi = std::max(hi, trace[i]);
    sum_y += trace[i];
  }
  report.window_range = hi - lo;

  const double mean_x = 0.5 * (len - 1);
  const double mean_y = sum_y / len;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < len; ++i) {
    sxy += (i - mean_x) * (trace[report.window_begin + i] - mean_y);
    sxx += (i - mean_x) * (i - mean_x);
  }
  report.window_slope = sxy / sxx;
  report.converged = report.window_range < 3.0 && std::abs(report.window_slope) < 0.01;
  return report;
}

DerivedQuantities derived_quantities(const Chain& chain,
                                     const std::vector<CovariateProfile>& profiles,
                                     const std::vector<double>& time_grid,
                                     int n_draws, std::uint64_t seed,
                                     bool average_all_configs) {
  if (chain.kept.empty() || chain.most_likely_index < 0)
    throw ContractError("derived_quantities: chain holds no kept samples");
  if (n_draws < 2) throw ContractError("derived_quantities: need at least 2 draws");
  for (std::size_t k = 0; k < time_grid.size(); ++k) {
    if (!(time_grid[k] > 0.0))
      throw ContractError("derived_quantities: time grid must be positive");
    if (k > 0 && !(time_grid[k] > time_grid[k - 1]))
      throw ContractError("derived_quantities: time grid must be strictly increasing");
  }
  const int nc = chain.p_incidence + chain.p_latency;
  for (const auto& profile : profiles)
    if (profile.incidence_row.size() != chain.p_incidence ||
        profile.latency_row.size() != chain.p_latency)
      throw ContractError("derived_quantities: profile '" + profile.name +
                          "' does not match the design dimensions");

  Rng rng(Rng::mix(seed));
  const std::size_t n_profiles = profiles.size();
  std::vector<std::vector<double>> cure_draws(n_profiles);
  for (auto& v : cure_draws) v.reserve(n_draws);
  std::vector<std::vector<double>> surv_sum(n_profiles,
                                            std::vector<double>(time_grid.size(), 0.0));

  Eigen::VectorXd coef(nc), noise(nc);
  for (int draw = 0; draw < n_draws; ++draw) {
    const int kept_index =
        average_all_configs
            ? std::min<int>(static_cast<int>(rng.uniform() * chain.kept.size()),
                            static_cast<int>(chain.kept.size()) - 1)
            : chain.most_likely_index;
    const ConditionalFit& fit = *chain.kept[kept_index].fit;

    // Grid point by weight, then a Gaussian draw of the coefficient block.
    double u = rng.uniform();
    std::size_t m = 0;
    for (; m + 1 < fit.grid.size(); ++m) {
      u -= std::exp(fit.grid[m].log_weight);
      if (u <= 0.0) break;
    }
    const HyperGridPoint& point = fit.grid[m];
    for (int j = 0; j < nc; ++j) noise[j] = rng.normal();
    coef = point.coef_mode + point.coef_cov.llt().matrixL() * noise;

    ParameterPoint p;
    p.incidence_coef = coef.head(chain.p_incidence);
    p.latency_coef = coef.tail(chain.p_latency);
    p.log_shape = point.log_shape;

    for (std::size_t q = 0; q < n_profiles; ++q) {
      cure_draws[q].push_back(incidence_prob(p.incidence_coef, profiles[q].incidence_row));
      for (std::size_t k = 0; k < time_grid.size(); ++k)
        surv_sum[q][k] += latency_survival(time_grid[k], p, profiles[q].latency_row);
    }
  }

  DerivedQuantities out;
  out.cure.reserve(n_profiles);
  out.survival.reserve(n_profiles);
  for (std::size_t q = 0; q < n_profiles; ++q) {
    CureEstimate est;
    est.profile = profiles[q].name;
    auto& draws = cure_draws[q];
    double sum = 0.0;
    for (double v : draws) sum += v;
    est.mean = sum / n_draws;
    double ss = 0.0;
    for (double v : draws) ss += (v - est.mean) * (v - est.mean);
    est.sd = std::sqrt(ss / (n_draws - 1));
    std::sort(draws.begin(), draws.end());
    const auto empirical_quantile = [&](double prob) {
      const double pos = prob * (n_draws - 1);
      const int lo = static_cast<int>(pos);
      const int hi = std::min(lo + 1, n_draws - 1);
      const double w = pos - lo;
      return (1.0 - w) * draws[lo] + w * draws[hi];
    };
    est.ci_low = empirical_quantile(0.025);
    est.ci_high = empirical_quantile(0.975);
    out.cure.push_back(std::move(est));

    SurvivalCurve curve;
    curve.profile = profiles[q].name;
    curve.time = time_grid;
    curve.mean_survival.resize(time_grid.size());
    for (std::size_t k = 0; k < time_grid.size(); ++k)
      curve.mean_survival[k] = surv_sum[q][k] / n_draws;
    out.survival.push_back(std::move(curve));
  }
  return out;
}

}  // namespace curemix
