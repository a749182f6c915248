#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curemix/data_io.hpp"
#include "curemix/gibbs.hpp"
#include "curemix/mcmc.hpp"
#include "curemix/oracle.hpp"
#include "curemix/report.hpp"

namespace fs = std::filesystem;
using namespace curemix;

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string join_exact(const std::vector<double>& values) {
  std::vector<std::string> parts;
  parts.reserve(values.size());
  for (double v : values) parts.push_back(format_exact(v));
  return join(parts, ",");
}

Eigen::VectorXd to_vector(const std::vector<double>& values) {
  return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
}

void print_warnings(const Dataset& d) {
  for (const auto& w : d.warnings) std::cerr << "warning: " << w << "\n";
}

/// Flags shared by every subcommand that reads a dataset.
struct DataArgs {
  std::string data_path;
  std::string time_col = "time";
  std::string status_col = "status";
  std::vector<std::string> incidence_cov;
  std::vector<std::string> latency_cov;
  std::vector<std::string> center_cols;
  std::string family = "weibull-ph";
  bool flip_status = false;
  bool no_latency_intercept = false;
  double coef_variance = 1000.0;
  double shape_a = 0.01;
  double shape_b = 0.01;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", data_path, "input CSV file with a header row")->required();
    cmd->add_option("--time-col", time_col, "survival time column (positive reals)");
    cmd->add_option("--status-col", status_col, "status column, 1 = event, 0 = censored");
    cmd->add_option("--incidence-cov", incidence_cov,
                    "comma-separated covariate columns for the cure-probability part")
        ->delimiter(',');
    cmd->add_option("--latency-cov", latency_cov,
                    "comma-separated covariate columns for the uncured-survival part")
        ->delimiter(',');
    cmd->add_option("--center", center_cols,
                    "comma-separated covariates to center on their sample mean")
        ->delimiter(',');
    cmd->add_option("--family", family, "latency family")
        ->check(CLI::IsMember({"weibull-ph", "weibull-aft"}));
    cmd->add_flag("--flip-status", flip_status, "input file codes 1 = censored");
    cmd->add_flag("--no-latency-intercept", no_latency_intercept,
                  "drop the latency intercept (proportional hazards only)");
    cmd->add_option("--coef-variance", coef_variance,
                    "prior variance of every regression coefficient")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--shape-a", shape_a, "Gamma prior shape for the Weibull alpha")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--shape-b", shape_b, "Gamma prior rate for the Weibull alpha")
        ->check(CLI::PositiveNumber);
  }

  ColumnSchema schema() const {
    ColumnSchema s;
    s.time_col = time_col;
    s.status_col = status_col;
    s.incidence_cov = incidence_cov;
    s.latency_cov = latency_cov;
    s.center_cols = center_cols;
    s.family = family_from_name(family);
    s.latency_intercept = !no_latency_intercept;
    s.flip_status = flip_status;
    return s;
  }

  PriorSpec prior() const {
    PriorSpec p;
    p.coef_variance = coef_variance;
    p.shape_a = shape_a;
    p.shape_b = shape_b;
    p.validate();
    return p;
  }

  void describe(Manifest& m) const {
    m.emplace_back("data", data_path);
    m.emplace_back("time-col", time_col);
    m.emplace_back("status-col", status_col);
    m.emplace_back("incidence-cov", join(incidence_cov, ","));
    m.emplace_back("latency-cov", join(latency_cov, ","));
    m.emplace_back("center", join(center_cols, ","));
    m.emplace_back("family", family);
    m.emplace_back("flip-status", flip_status ? "yes" : "no");
    m.emplace_back("latency-intercept", no_latency_intercept ? "no" : "yes");
    m.emplace_back("coef-variance", format_exact(coef_variance));
    m.emplace_back("shape-a", format_exact(shape_a));
    m.emplace_back("shape-b", format_exact(shape_b));
  }
};

std::vector<std::string> flat_parameter_names(const Dataset& d) {
  std::vector<std::string> names;
  for (const auto& n : d.incidence_names) names.push_back("incidence." + n);
  for (const auto& n : d.latency_names) names.push_back("latency." + n);
  names.push_back("log(alpha)");
  return names;
}

Eigen::VectorXd profile_row(const std::vector<std::string>& names) {
  Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == "(Intercept)") row[static_cast<Eigen::Index>(j)] = 1.0;
  return row;
}

/// Parses "name" or "name:cov=value,cov=value". Values are on the original
/// data scale; centered covariates are shifted by their stored means.
CovariateProfile parse_profile(const std::string& text, const Dataset& d) {
  CovariateProfile profile;
  const std::size_t colon = text.find(':');
  profile.name = text.substr(0, colon);
  if (profile.name.empty())
    throw DataError("--profile: missing profile name in '" + text + "'");
  profile.incidence_row = profile_row(d.incidence_names);
  profile.latency_row = profile_row(d.latency_names);
  if (colon == std::string::npos) return profile;

  std::string rest = text.substr(colon + 1);
  std::size_t start = 0;
  while (start <= rest.size()) {
    std::size_t comma = rest.find(',', start);
    if (comma == std::string::npos) comma = rest.size();
    const std::string entry = rest.substr(start, comma - start);
    start = comma + 1;
    if (entry.empty()) continue;
    const std::size_t eq = entry.find('=');
    if (eq == std::string::npos)
      throw DataError("--profile: expected cov=value, got '" + entry + "'");
    const std::string key = entry.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(entry.substr(eq + 1));
    } catch (const std::exception&) {
      throw DataError("--profile: non-numeric value in '" + entry + "'");
    }
    const auto centered = d.centering_means.find(key);
    if (centered != d.centering_means.end()) value -= centered->second;

    bool found = false;
    for (std::size_t j = 0; j < d.incidence_names.size(); ++j)
      if (d.incidence_names[j] == key) {
        profile.incidence_row[static_cast<Eigen::Index>(j)] = value;
        found = true;
      }
    for (std::size_t j = 0; j < d.latency_names.size(); ++j)
      if (d.latency_names[j] == key) {
        profile.latency_row[static_cast<Eigen::Index>(j)] = value;
        found = true;
      }
    if (!found)
      throw DataError("--profile: covariate '" + key + "' is not in either model part");
  }
  return profile;
}

std::vector<CovariateProfile> make_profiles(const std::vector<std::string>& specs,
                                            const Dataset& d) {
  std::vector<CovariateProfile> profiles;
  if (specs.empty()) {
    CovariateProfile baseline;
    baseline.name = "baseline";
    baseline.incidence_row = profile_row(d.incidence_names);
    baseline.latency_row = profile_row(d.latency_names);
    profiles.push_back(std::move(baseline));
    return profiles;
  }
  profiles.reserve(specs.size());
  for (const auto& text : specs) profiles.push_back(parse_profile(text, d));
  return profiles;
}

std::vector<double> make_time_grid(const Dataset& d, int points, double time_max) {
  if (points < 2) throw DataError("--time-points: need at least 2 grid points");
  const double tmax = time_max > 0.0 ? time_max : d.time.maxCoeff();
  std::vector<double> grid(points);
  for (int i = 0; i < points; ++i) grid[i] = tmax * (i + 1) / points;
  return grid;
}

/// Modal-Gibbs settings shared by `fit` and `compare`.
struct FitArgs {
  int burnin = 50;
  int keep = 90;
  int thin = 5;
  int grid_size = 15;
  std::uint64_t seed = 1;
  std::vector<std::string> profile_specs;
  int time_points = 100;
  double time_max = 0.0;  // 0 = largest observed time
  int draws = 1000;

  void attach(CLI::App* cmd) {
    cmd->add_option("--burnin", burnin, "modal-Gibbs burn-in iterations")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--keep", keep, "latent samples to keep")->check(CLI::PositiveNumber);
    cmd->add_option("--thin", thin, "iterations between kept samples")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--grid-size", grid_size, "log-shape quadrature points (odd)")
        ->check(CLI::Range(3, 201));
    cmd->add_option("--seed", seed, "RNG seed");
    cmd->add_option("--profile", profile_specs,
                    "covariate profile NAME or NAME:cov=value,... (repeatable; "
                    "default: baseline at centered covariate means)");
    cmd->add_option("--time-points", time_points, "survival grid size")
        ->check(CLI::Range(2, 100000));
    cmd->add_option("--time-max", time_max,
                    "survival grid upper end (default: largest observed time)");
    cmd->add_option("--draws", draws, "posterior draws for derived quantities")
        ->check(CLI::Range(2, 10000000));
  }

  GibbsConfig config() const {
    GibbsConfig cfg;
    cfg.burnin = burnin;
    cfg.keep = keep;
    cfg.thin = thin;
    cfg.seed = seed;
    cfg.grid_size = grid_size;
    cfg.validate();
    return cfg;
  }

  void describe(Manifest& m) const {
    m.emplace_back("burnin", std::to_string(burnin));
    m.emplace_back("keep", std::to_string(keep));
    m.emplace_back("thin", std::to_string(thin));
    m.emplace_back("grid-size", std::to_string(grid_size));
    m.emplace_back("seed", std::to_string(seed));
    m.emplace_back("profile", join(profile_specs, " | "));
    m.emplace_back("time-points", std::to_string(time_points));
    m.emplace_back("time-max", format_exact(time_max));
    m.emplace_back("draws", std::to_string(draws));
  }
};

struct McmcArgs {
  int chains = 3;
  int iters = 20000;
  int burnin = 4000;
  int thin = 0;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd, const std::string& prefix = "") {
    cmd->add_option("--chains", chains, "number of MCMC chains")->check(CLI::Range(2, 64));
    cmd->add_option("--iters", iters, "iterations per chain, burn-in included")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--" + prefix + "burnin", burnin, "MCMC burn-in iterations")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--" + prefix + "thin", thin,
                    "MCMC thinning (0 = auto, at most 3000 kept per chain)")
        ->check(CLI::NonNegativeNumber);
    if (prefix.empty()) cmd->add_option("--seed", seed, "RNG seed");
  }

  McmcConfig config() const {
    McmcConfig cfg;
    cfg.chains = chains;
    cfg.iterations = iters;
    cfg.burnin = burnin;
    cfg.thin = thin;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
  }

  void describe(Manifest& m, const std::string& prefix = "") const {
    m.emplace_back("chains", std::to_string(chains));
    m.emplace_back("iters", std::to_string(iters));
    m.emplace_back(prefix + "burnin", std::to_string(burnin));
    m.emplace_back(prefix + "thin", std::to_string(thin));
    if (prefix.empty()) m.emplace_back("seed", std::to_string(seed));
  }
};

void describe_chain_diagnostics(Manifest& m, const Chain& chain,
                                const ConvergenceReport& conv) {
  m.emplace_back("converged", conv.converged ? "yes" : "no");
  m.emplace_back("window-begin", std::to_string(conv.window_begin));
  m.emplace_back("window-range-nats", format_exact(conv.window_range));
  m.emplace_back("window-slope-nats-per-iter", format_exact(conv.window_slope));
  m.emplace_back("rejected-iterations", std::to_string(chain.rejected_iterations));
  m.emplace_back("most-likely-kept-index", std::to_string(chain.most_likely_index));
  m.emplace_back("cml-trace", join_exact(chain.cml_trace));
}

void describe_mcmc_diagnostics(Manifest& m, const McmcResult& res, const Dataset& d) {
  m.emplace_back("converged", res.converged ? "yes" : "no");
  m.emplace_back("thin-used", std::to_string(res.thin_used));
  m.emplace_back("kept-per-chain", std::to_string(res.kept_per_chain));
  const std::vector<std::string> names = flat_parameter_names(d);
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto idx = static_cast<Eigen::Index>(j);
    m.emplace_back("psrf." + names[j], format_exact(res.psrf[idx]));
    m.emplace_back("ess." + names[j], format_exact(res.ess[idx]));
    m.emplace_back("accept-rate." + names[j],
                   format_exact(res.acceptance_rate.col(idx).mean()));
  }
}

void describe_warnings(Manifest& m, const std::vector<std::string>& warnings) {
  if (!warnings.empty()) m.emplace_back("warnings", join(warnings, " | "));
}

int run_fit_command(const DataArgs& data_args, const FitArgs& fit_args,
                    const std::string& out_dir) {
  const Dataset d = read_dataset(data_args.data_path, data_args.schema());
  print_warnings(d);
  const Chain chain = run_chain(d, data_args.prior(), fit_args.config());
  const AveragedPosterior post = average_marginals(chain);
  const ConvergenceReport conv = assess_convergence(chain.cml_trace);
  const auto profiles = make_profiles(fit_args.profile_specs, d);
  const auto grid = make_time_grid(d, fit_args.time_points, fit_args.time_max);
  const DerivedQuantities derived =
      derived_quantities(chain, profiles, grid, fit_args.draws, fit_args.seed);

  fs::create_directories(out_dir);
  write_summary_csv((fs::path(out_dir) / "summary.csv").string(), summary_table(post, d));
  write_cure_csv((fs::path(out_dir) / "cure.csv").string(), derived.cure);
  write_survival_csv((fs::path(out_dir) / "survival.csv").string(),
                     survival_grid(derived.survival));

  Manifest m;
  m.emplace_back("command", "fit");
  data_args.describe(m);
  fit_args.describe(m);
  m.emplace_back("out", out_dir);
  describe_chain_diagnostics(m, chain, conv);
  describe_warnings(m, d.warnings);
  write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);

  if (!conv.converged) {
    std::cerr << "fit: the conditional-log-marginal trace has not stabilized "
                 "(range "
              << format_stat(conv.window_range) << " nats, slope "
              << format_stat(conv.window_slope)
              << " nats/iter); results written and flagged\n";
    return 3;
  }
  return 0;
}

int run_mcmc_command(const DataArgs& data_args, const McmcArgs& mcmc_args,
                     const std::string& out_dir) {
  const Dataset d = read_dataset(data_args.data_path, data_args.schema());
  print_warnings(d);
  const McmcResult res = run_mcmc(d, data_args.prior(), mcmc_args.config());

  fs::create_directories(out_dir);
  write_summary_csv((fs::path(out_dir) / "summary.csv").string(),
                    summary_from_draws(res.pooled(), d));

  Manifest m;
  m.emplace_back("command", "mcmc");
  data_args.describe(m);
  mcmc_args.describe(m);
  m.emplace_back("out", out_dir);
  describe_mcmc_diagnostics(m, res, d);
  describe_warnings(m, d.warnings);
  write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);

  if (!res.converged) {
    std::cerr << "mcmc: PSRF above 1.1 for at least one parameter; results "
                 "written and flagged\n";
    return 3;
  }
  return 0;
}

int run_oracle_command(const DataArgs& data_args, int quad_points,
                       const std::string& out_dir) {
  const Dataset d = read_dataset(data_args.data_path, data_args.schema());
  print_warnings(d);
  QuadratureSpec quad;
  quad.points_per_dim = quad_points;
  const OracleResult oracle = enumerate_posterior(d, data_args.prior(), quad);
  for (const auto& w : oracle.warnings) std::cerr << "warning: " << w << "\n";

  AveragedPosterior post;
  post.coef = oracle.coef_marginals;
  post.shape = oracle.shape_marginal;
  post.log_shape = oracle.log_shape_marginal;

  fs::create_directories(out_dir);
  write_summary_csv((fs::path(out_dir) / "summary.csv").string(), summary_table(post, d));
  {
    std::ofstream configs((fs::path(out_dir) / "configs.csv").string());
    if (!configs) throw DataError("cannot write configs.csv");
    configs << "index,censored_z,probability,log_evidence\n";
    const auto censored = d.censored_indices();
    for (std::size_t k = 0; k < oracle.configurations.size(); ++k) {
      std::string bits(censored.size(), '0');
      for (std::size_t c = 0; c < censored.size(); ++c)
        bits[c] = oracle.configurations[k].z[censored[c]] ? '1' : '0';
      configs << k << ',' << bits << ','
              << format_exact(oracle.config_probability[static_cast<Eigen::Index>(k)])
              << ',' << format_exact(oracle.config_log_evidence[k]) << '\n';
    }
  }

  Manifest m;
  m.emplace_back("command", "oracle");
  data_args.describe(m);
  m.emplace_back("quad-points", std::to_string(quad_points));
  m.emplace_back("out", out_dir);
  m.emplace_back("log-evidence", format_exact(oracle.log_evidence));
  m.emplace_back("configurations", std::to_string(oracle.configurations.size()));
  describe_warnings(m, oracle.warnings);
  describe_warnings(m, d.warnings);
  write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);
  return 0;
}

CovariateGenerator parse_covariate(const std::string& text) {
  CovariateGenerator cov;
  const std::size_t first = text.find(':');
  cov.name = text.substr(0, first);
  if (cov.name.empty() || first == std::string::npos)
    throw DataError("--covariate: expected name:normal or name:bernoulli:p, got '" +
                    text + "'");
  const std::string rest = text.substr(first + 1);
  const std::size_t second = rest.find(':');
  const std::string kind = rest.substr(0, second);
  if (kind == "normal") {
    if (second != std::string::npos)
      throw DataError("--covariate: the normal generator takes no parameter in '" +
                      text + "'");
    cov.kind = CovariateGenerator::Kind::normal;
  } else if (kind == "bernoulli") {
    if (second == std::string::npos)
      throw DataError("--covariate: bernoulli needs a probability in '" + text + "'");
    cov.kind = CovariateGenerator::Kind::bernoulli;
    try {
      cov.param = std::stod(rest.substr(second + 1));
    } catch (const std::exception&) {
      throw DataError("--covariate: non-numeric probability in '" + text + "'");
    }
  } else {
    throw DataError("--covariate: unknown generator '" + kind + "' in '" + text + "'");
  }
  return cov;
}

struct SimulateArgs {
  int n = 100;
  std::vector<double> incidence_coef{0.0};
  std::vector<double> latency_coef{0.0};
  double shape = 1.0;
  std::string family = "weibull-ph";
  bool no_latency_intercept = false;
  std::vector<std::string> covariate_specs;
  double admin_censor = 3.0;
  double exp_censor_rate = 0.0;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--n", n, "subjects to simulate")->check(CLI::PositiveNumber);
    cmd->add_option("--incidence-coef", incidence_coef,
                    "cure-probability coefficients, intercept first")
        ->delimiter(',');
    cmd->add_option("--latency-coef", latency_coef,
                    "latency coefficients, intercept first unless disabled")
        ->delimiter(',');
    cmd->add_option("--shape", shape, "Weibull shape alpha")->check(CLI::PositiveNumber);
    cmd->add_option("--family", family, "latency family")
        ->check(CLI::IsMember({"weibull-ph", "weibull-aft"}));
    cmd->add_flag("--no-latency-intercept", no_latency_intercept,
                  "simulate without a latency intercept (proportional hazards only)");
    cmd->add_option("--covariate", covariate_specs,
                    "generator name:normal or name:bernoulli:p (repeatable)");
    cmd->add_option("--admin-censor", admin_censor,
                    "administrative censoring time (inf disables)");
    cmd->add_option("--exp-censor-rate", exp_censor_rate,
                    "rate of an extra exponential censoring draw (0 disables)")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", seed, "RNG seed");
  }

  SimulationSpec spec() const {
    SimulationSpec s;
    s.n = n;
    s.incidence_coef = to_vector(incidence_coef);
    s.latency_coef = to_vector(latency_coef);
    s.shape = shape;
    s.family = family_from_name(family);
    s.latency_intercept = !no_latency_intercept;
    for (const auto& text : covariate_specs) s.covariates.push_back(parse_covariate(text));
    s.admin_censor_time = admin_censor;
    s.exp_censor_rate = exp_censor_rate;
    s.seed = seed;
    return s;
  }
};

int run_simulate_command(const SimulateArgs& args, const std::string& out_dir) {
  const SimulationSpec spec = args.spec();
  auto [d, truth] = simulate(spec);
  print_warnings(d);

  fs::create_directories(out_dir);
  write_dataset(d, (fs::path(out_dir) / "data.csv").string());
  {
    std::ofstream truth_file((fs::path(out_dir) / "truth.json").string());
    if (!truth_file) throw DataError("cannot write truth.json");
    truth_file << truth_to_json(truth, spec);
  }

  Manifest m;
  m.emplace_back("command", "simulate");
  m.emplace_back("n", std::to_string(args.n));
  m.emplace_back("incidence-coef", join_exact(args.incidence_coef));
  m.emplace_back("latency-coef", join_exact(args.latency_coef));
  m.emplace_back("shape", format_exact(args.shape));
  m.emplace_back("family", args.family);
  m.emplace_back("latency-intercept", args.no_latency_intercept ? "no" : "yes");
  m.emplace_back("covariate", join(args.covariate_specs, " | "));
  m.emplace_back("admin-censor", format_exact(args.admin_censor));
  m.emplace_back("exp-censor-rate", format_exact(args.exp_censor_rate));
  m.emplace_back("seed", std::to_string(args.seed));
  m.emplace_back("out", out_dir);
  m.emplace_back("censoring", truth.censoring);
  m.emplace_back("expected-censored", format_exact(truth.expected_censored));
  m.emplace_back("observed-censored", std::to_string(d.n_censored()));
  describe_warnings(m, d.warnings);
  write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);
  return 0;
}

int run_compare_command(const DataArgs& data_args, const FitArgs& fit_args,
                        const McmcArgs& mcmc_args, const std::string& out_dir) {
  const Dataset d = read_dataset(data_args.data_path, data_args.schema());
  print_warnings(d);

  const Chain chain = run_chain(d, data_args.prior(), fit_args.config());
  const ConvergenceReport conv = assess_convergence(chain.cml_trace);
  const auto fit_rows = summary_table(average_marginals(chain), d);

  McmcArgs mcmc_with_seed = mcmc_args;
  mcmc_with_seed.seed = fit_args.seed;
  const McmcResult res = run_mcmc(d, data_args.prior(), mcmc_with_seed.config());
  const Eigen::MatrixXd pooled = res.pooled();
  const auto mcmc_rows = summary_from_draws(pooled, d);
  if (fit_rows.size() != mcmc_rows.size())
    throw ContractError("compare: summary tables differ in length");

  fs::create_directories(out_dir);
  write_summary_csv((fs::path(out_dir) / "summary_fit.csv").string(), fit_rows);
  write_summary_csv((fs::path(out_dir) / "summary_mcmc.csv").string(), mcmc_rows);
  {
    std::ofstream cmp((fs::path(out_dir) / "comparison.csv").string());
    if (!cmp) throw DataError("cannot write comparison.csv");
    cmp << "parameter,fit_mean,mcmc_mean,abs_diff,fit_sd,mcmc_sd,mcmc_mcse\n";
    const int n_coef = d.p_incidence() + d.p_latency();
    for (std::size_t r = 0; r < fit_rows.size(); ++r) {
      // MCSE of the mean via the parameter's effective sample size; the
      // transformed rows reuse the ESS of the parameter they derive from.
      int ess_index = static_cast<int>(r);
      if (fit_rows[r].parameter == "alpha") ess_index = n_coef;
      if (fit_rows[r].parameter.rfind("exp(", 0) == 0) ess_index = d.p_incidence();
      const double mcse =
          mcmc_rows[r].sd / std::sqrt(std::max(1.0, res.ess[ess_index]));
      cmp << fit_rows[r].parameter << ',' << format_stat(fit_rows[r].mean) << ','
          << format_stat(mcmc_rows[r].mean) << ','
          << format_stat(std::abs(fit_rows[r].mean - mcmc_rows[r].mean)) << ','
          << format_stat(fit_rows[r].sd) << ',' << format_stat(mcmc_rows[r].sd) << ','
          << format_stat(mcse) << '\n';
    }
  }

  Manifest m;
  m.emplace_back("command", "compare");
  data_args.describe(m);
  fit_args.describe(m);
  mcmc_with_seed.describe(m, "mcmc-");
  m.emplace_back("out", out_dir);
  describe_chain_diagnostics(m, chain, conv);
  describe_mcmc_diagnostics(m, res, d);
  describe_warnings(m, d.warnings);
  write_manifest((fs::path(out_dir) / "manifest.txt").string(), m);

  if (!conv.converged || !res.converged) {
    std::cerr << "compare: at least one backend has not converged; results "
                 "written and flagged\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian mixture cure model inference"};
  app.require_subcommand(1);

  DataArgs fit_data, mcmc_data, oracle_data, compare_data;
  FitArgs fit_args, compare_fit_args;
  McmcArgs mcmc_args, compare_mcmc_args;
  SimulateArgs sim_args;
  std::string fit_out = ".", mcmc_out = ".", oracle_out = ".", sim_out = ".",
              compare_out = ".";
  int quad_points = 161;

  CLI::App* fit = app.add_subcommand("fit", "modal Gibbs with Laplace approximations");
  fit_data.attach(fit);
  fit_args.attach(fit);
  fit->add_option("--out", fit_out, "output directory");

  CLI::App* mcmc = app.add_subcommand("mcmc", "Metropolis-within-Gibbs reference sampler");
  mcmc_data.attach(mcmc);
  mcmc_args.attach(mcmc);
  mcmc->add_option("--out", mcmc_out, "output directory");

  CLI::App* oracle =
      app.add_subcommand("oracle", "exact enumeration + quadrature on tiny instances");
  oracle_data.attach(oracle);
  oracle->add_option("--quad-points", quad_points, "quadrature points per dimension")
      ->check(CLI::Range(9, 4001));
  oracle->add_option("--out", oracle_out, "output directory");

  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "generate synthetic data with recorded truth");
  sim_args.attach(simulate_cmd);
  simulate_cmd->add_option("--out", sim_out, "output directory");

  CLI::App* compare =
      app.add_subcommand("compare", "run fit and mcmc, emit a side-by-side table");
  compare_data.attach(compare);
  compare_fit_args.attach(compare);
  compare_mcmc_args.attach(compare, "mcmc-");
  compare->add_option("--out", compare_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (fit->parsed()) return run_fit_command(fit_data, fit_args, fit_out);
    if (mcmc->parsed()) return run_mcmc_command(mcmc_data, mcmc_args, mcmc_out);
    if (oracle->parsed()) return run_oracle_command(oracle_data, quad_points, oracle_out);
    if (simulate_cmd->parsed()) return run_simulate_command(sim_args, sim_out);
    if (compare->parsed())
      return run_compare_command(compare_data, compare_fit_args, compare_mcmc_args,
                                 compare_out);
  } catch (const ChainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
