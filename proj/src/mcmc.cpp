#include "curemix/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "curemix/gibbs.hpp"
#include "curemix/model.hpp"
#include "curemix/rng.hpp"

namespace curemix {

namespace {

struct ChainState {
  Eigen::MatrixXd draws;
  Eigen::MatrixXi censored_z;
  Eigen::VectorXd z_sum;       // per subject, over kept draws
  Eigen::VectorXd acceptance;  // per parameter, post-burnin rate
};

void run_one_chain(const Dataset& d, const PriorSpec& prior, const McmcConfig& cfg,
                   int chain_index, int thin, int kept_per_chain, ChainState* out) {
  const int p1 = d.p_incidence();
  const int p2 = d.p_latency();
  const int dim = p1 + p2 + 1;
  const std::vector<int> censored = d.censored_indices();
  Rng rng(Rng::mix(cfg.seed + 1000003ULL * static_cast<std::uint64_t>(chain_index)));

  // Overdispersed start, with the intercepts anchored at crude data-driven
  // ballparks: an incidence intercept far below the logit of the censored
  // fraction makes the cure indicators all-susceptible nearly absorbing, and
  // chains started there take very long to escape.
  ParameterPoint p = ParameterPoint::zeros(p1, p2);
  for (int j = 0; j < p1; ++j) p.incidence_coef[j] = cfg.init_coef_sd * rng.normal();
  for (int j = 0; j < p2; ++j) p.latency_coef[j] = cfg.init_coef_sd * rng.normal();
  p.log_shape = cfg.init_shape_sd * rng.normal();
  if (d.n() > 0) {
    const double cen_frac = std::clamp(
        static_cast<double>(d.n_censored()) / d.n(), 1.0 / (d.n() + 1.0),
        static_cast<double>(d.n()) / (d.n() + 1.0));
    p.incidence_coef[0] += std::log(cen_frac / (1.0 - cen_frac));
    if (!d.latency_names.empty() && d.latency_names.front() == "(Intercept)")
      p.latency_coef[0] +=
          std::log((d.event.cast<double>().sum() + 0.5) / d.time.sum());
  }
  LatentAssignment z = LatentAssignment::all_susceptible(d);
  for (int i : censored) z.z[i] = rng.bernoulli(0.5);

  double inc_ll = incidence_loglik(p.incidence_coef, d, z);
  double lat_ll = latency_loglik(p.latency_coef, p.log_shape, d, z);
  const double v = prior.coef_variance;

  Eigen::VectorXd log_scale = Eigen::VectorXd::Constant(dim, std::log(0.5));
  Eigen::VectorXi window_accepts = Eigen::VectorXi::Zero(dim);
  Eigen::VectorXi total_accepts = Eigen::VectorXi::Zero(dim);

  out->draws.resize(kept_per_chain, dim);
  out->censored_z.resize(kept_per_chain, static_cast<int>(censored.size()));
  out->z_sum = Eigen::VectorXd::Zero(d.n());
  int row = 0;

  for (int it = 1; it <= cfg.iterations; ++it) {
    // Exact Gibbs update of the censored latent indicators.
    for (int i : censored) {
      const double eta =
          incidence_prob(p.incidence_coef, d.incidence_design.row(i).transpose());
      const double surv = latency_survival(d.time[i], p, d.latency_design.row(i).transpose());
      z.z[i] = rng.bernoulli(1.0 - susceptible_probability(0, eta, surv));
    }
    inc_ll = incidence_loglik(p.incidence_coef, d, z);
    lat_ll = latency_loglik(p.latency_coef, p.log_shape, d, z);

    // Component-wise Gaussian random-walk Metropolis. The incidence and
    // latency blocks factor, so only the touched block is re-evaluated.
    for (int j = 0; j < dim; ++j) {
      const double step = std::exp(log_scale[j]) * rng.normal();
      double log_ratio;
      double proposed_block_ll;
      if (j < p1) {
        const double old = p.incidence_coef[j];
        p.incidence_coef[j] = old + step;
        proposed_block_ll = incidence_loglik(p.incidence_coef, d, z);
        log_ratio = proposed_block_ll - inc_ll -
                    (p.incidence_coef[j] * p.incidence_coef[j] - old * old) / (2.0 * v);
        if (std::log(rng.uniform()) < log_ratio) {
          inc_ll = proposed_block_ll;
          ++window_accepts[j];
          if (it > cfg.burnin) ++total_accepts[j];
        } else {
          p.incidence_coef[j] = old;
        }
      } else if (j < p1 + p2) {
        const int k = j - p1;
        const double old = p.latency_coef[k];
        p.latency_coef[k] = old + step;
        proposed_block_ll = latency_loglik(p.latency_coef, p.log_shape, d, z);
        log_ratio = proposed_block_ll - lat_ll -
                    (p.latency_coef[k] * p.latency_coef[k] - old * old) / (2.0 * v);
        if (std::log(rng.uniform()) < log_ratio) {
          lat_ll = proposed_block_ll;
          ++window_accepts[j];
          if (it > cfg.burnin) ++total_accepts[j];
        } else {
          p.latency_coef[k] = old;
        }
      } else {
        const double old = p.log_shape;
        p.log_shape = old + step;
        proposed_block_ll = latency_loglik(p.latency_coef, p.log_shape, d, z);
        log_ratio = proposed_block_ll - lat_ll +
                    prior.shape_a * (p.log_shape - old) -
                    prior.shape_b * (std::exp(p.log_shape) - std::exp(old));
        if (std::log(rng.uniform()) < log_ratio) {
          lat_ll = proposed_block_ll;
          ++window_accepts[j];
          if (it > cfg.burnin) ++total_accepts[j];
        } else {
          p.log_shape = old;
        }
      }
    }

    // Scale adaptation toward the target rate, frozen after burnin.
    if (it <= cfg.burnin && it % cfg.adapt_window == 0) {
      for (int j = 0; j < dim; ++j) {
        const double rate = static_cast<double>(window_accepts[j]) / cfg.adapt_window;
        log_scale[j] += 0.5 * (rate - cfg.target_accept);
      }
      window_accepts.setZero();
    }

    if (it > cfg.burnin && (it - cfg.burnin) % thin == 0 && row < kept_per_chain) {
      out->draws.row(row) = p.flatten().transpose();
      for (std::size_t c = 0; c < censored.size(); ++c)
        out->censored_z(row, static_cast<int>(c)) = z.z[censored[c]];
      out->z_sum += z.z.cast<double>();
      ++row;
    }
  }
  out->acceptance =
      total_accepts.cast<double>() / static_cast<double>(cfg.iterations - cfg.burnin);
}

}  // namespace

McmcResult run_mcmc(const Dataset& d, const PriorSpec& prior, const McmcConfig& cfg) {
  d.validate();
  cfg.validate();
  prior.validate();
  const int dim = d.p_incidence() + d.p_latency() + 1;
  const int post_burnin = cfg.iterations - cfg.burnin;
  const int thin = cfg.thin > 0 ? cfg.thin : std::max(1, (post_burnin + 2999) / 3000);
  const int kept_per_chain = post_burnin / thin;
  if (kept_per_chain < 10)
    throw ContractError("run_mcmc: fewer than 10 kept draws per chain; lower thin or burnin");

  std::vector<ChainState> states(cfg.chains);
  std::vector<std::thread> workers;
  workers.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c)
    workers.emplace_back(run_one_chain, std::cref(d), std::cref(prior), std::cref(cfg), c,
                         thin, kept_per_chain, &states[c]);
  for (auto& w : workers) w.join();

  McmcResult result;
  result.thin_used = thin;
  result.kept_per_chain = kept_per_chain;
  result.draws.reserve(cfg.chains);
  result.censored_z_draws.reserve(cfg.chains);
  result.acceptance_rate.resize(cfg.chains, dim);
  result.cure_probability = Eigen::VectorXd::Zero(d.n());
  for (int c = 0; c < cfg.chains; ++c) {
    result.draws.push_back(std::move(states[c].draws));
    result.censored_z_draws.push_back(std::move(states[c].censored_z));
    result.acceptance_rate.row(c) = states[c].acceptance.transpose();
    result.cure_probability += states[c].z_sum;
  }
  result.cure_probability /= static_cast<double>(cfg.chains) * kept_per_chain;

  result.psrf.resize(dim);
  result.ess.resize(dim);
  for (int j = 0; j < dim; ++j) {
    std::vector<Eigen::VectorXd> per_chain;
    per_chain.reserve(cfg.chains);
    for (int c = 0; c < cfg.chains; ++c) per_chain.push_back(result.draws[c].col(j));
    result.psrf[j] = split_psrf(per_chain);
    result.ess[j] = effective_sample_size(per_chain);
  }
  result.converged = (result.psrf.array() <= 1.1).all();
  return result;
}

Eigen::MatrixXd McmcResult::pooled() const {
  if (draws.empty()) return {};
  const int dim = static_cast<int>(draws.front().cols());
  int rows = 0;
  for (const auto& m : draws) rows += static_cast<int>(m.rows());
  Eigen::MatrixXd all(rows, dim);
  int at = 0;
  for (const auto& m : draws) {
    all.middleRows(at, m.rows()) = m;
    at += static_cast<int>(m.rows());
  }
  return all;
}

namespace {

/// Split every chain in half; drops the middle draw of odd-length chains.
std::vector<Eigen::VectorXd> split_in_half(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> halves;
  halves.reserve(2 * chains.size());
  const Eigen::Index half = chains.front().size() / 2;
  for (const auto& chain : chains) {
    halves.push_back(chain.head(half));
    halves.push_back(chain.tail(half));
  }
  return halves;
}

void check_chains(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.size() < 2)
    throw ContractError("chain diagnostics need at least 2 chains");
  for (const auto& chain : chains)
    if (chain.size() != chains.front().size() || chain.size() < 10)
      throw ContractError("chain diagnostics need equal chain lengths of at least 10");
}

struct VarianceParts {
  double within = 0.0;
  double var_plus = 0.0;
};

VarianceParts pooled_variance(const std::vector<Eigen::VectorXd>& seqs) {
  const double n = static_cast<double>(seqs.front().size());
  const double m = static_cast<double>(seqs.size());
  double grand = 0.0;
  for (const auto& s : seqs) grand += s.mean();
  grand /= m;
  double between = 0.0, within = 0.0;
  for (const auto& s : seqs) {
    const double mu = s.mean();
    between += (mu - grand) * (mu - grand);
    within += (s.array() - mu).square().sum() / (n - 1.0);
  }
  between *= n / (m - 1.0);
  within /= m;
  return {within, (n - 1.0) / n * within + between / n};
}

}  // namespace

double split_psrf(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains);
  const auto halves = split_in_half(chains);
  const auto parts = pooled_variance(halves);
  if (!(parts.within > 0.0))
    return parts.var_plus > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(std::max(1.0, parts.var_plus / parts.within));
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  check_chains(chains);
  const auto halves = split_in_half(chains);
  const auto parts = pooled_variance(halves);
  const Eigen::Index n = halves.front().size();
  const double m = static_cast<double>(halves.size());
  const double total = m * static_cast<double>(n);
  if (!(parts.var_plus > 0.0)) return total;  // constant input: no information to lose

  // Variogram autocorrelations, summed over Geyer-truncated lag pairs.
  const auto rho = [&](Eigen::Index t) {
    double vario = 0.0;
    for (const auto& s : halves)
      vario += (s.head(n - t).array() - s.tail(n - t).array()).square().sum() /
               static_cast<double>(n - t);
    vario /= m;
    return 1.0 - vario / (2.0 * parts.var_plus);
  };

  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::max();
  for (Eigen::Index t = 1; t + 1 < n; t += 2) {
    const double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    // enforce monotone decrease of the pair sums for stability
    tau += 2.0 * std::min(pair, prev_pair);
    prev_pair = pair;
  }
  return std::clamp(total / tau, 1.0, total);
}

}  // namespace curemix
