#include "curemix/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace curemix {

namespace {

std::string printf_value(const char* fmt, double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), fmt, x);
  for (char& ch : buf)
    if (ch == ',') ch = '.';
  return buf;
}

bool wants_exp_intercept_row(const Dataset& d) {
  return d.family == LatencyFamily::weibull_ph && !d.latency_names.empty() &&
         d.latency_names.front() == "(Intercept)";
}

double empirical_quantile(const std::vector<double>& sorted, double prob) {
  const double pos = prob * (static_cast<double>(sorted.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

SummaryRow row_from_column(const std::string& name, std::vector<double> values,
                           bool has_p) {
  const int n = static_cast<int>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  int positive = 0;
  for (double v : values) {
    ss += (v - mean) * (v - mean);
    if (v > 0.0) ++positive;
  }
  std::sort(values.begin(), values.end());
  SummaryRow row;
  row.parameter = name;
  row.mean = mean;
  row.sd = std::sqrt(ss / (n - 1));
  row.ci_low = empirical_quantile(values, 0.025);
  row.ci_high = empirical_quantile(values, 0.975);
  row.p_gt_0 = has_p ? static_cast<double>(positive) / n : 0.0;
  row.has_p = has_p;
  return row;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

}  // namespace

std::vector<std::string> parameter_names(const Dataset& d) {
  std::vector<std::string> names;
  for (const auto& name : d.incidence_names) names.push_back("incidence." + name);
  for (const auto& name : d.latency_names) names.push_back("latency." + name);
  names.push_back("alpha");
  if (wants_exp_intercept_row(d)) names.push_back("exp(latency.(Intercept))");
  return names;
}

std::vector<SummaryRow> summary_table(const AveragedPosterior& post, const Dataset& d) {
  const std::vector<std::string> names = parameter_names(d);
  const int n_coef = d.p_incidence() + d.p_latency();
  if (static_cast<int>(post.coef.size()) != n_coef)
    throw ContractError("summary_table: posterior and dataset disagree on the "
                        "number of coefficients");

  std::vector<SummaryRow> rows;
  for (int j = 0; j < n_coef; ++j) {
    const Marginal& m = *post.coef[j];
    SummaryRow row;
    row.parameter = names[j];
    row.mean = m.mean();
    row.sd = m.sd();
    row.ci_low = m.quantile(0.025);
    row.ci_high = m.quantile(0.975);
    row.p_gt_0 = 1.0 - m.cdf(0.0);
    rows.push_back(row);
  }

  {
    const Marginal& m = *post.shape;
    SummaryRow row;
    row.parameter = "alpha";
    row.mean = m.mean();
    row.sd = m.sd();
    row.ci_low = m.quantile(0.025);
    row.ci_high = m.quantile(0.975);
    row.has_p = false;
    rows.push_back(row);
  }

  if (wants_exp_intercept_row(d)) {
    // The exponentiated latency intercept is the baseline rate scale of the
    // proportional-hazards parameterization; its moments follow from the
    // intercept's marginal.
    const Marginal& m = *post.coef[d.p_incidence()];
    SummaryRow row;
    row.parameter = names.back();
    row.mean = m.expect([](double x) { return std::exp(x); });
    const double second = m.expect([](double x) { return std::exp(2.0 * x); });
    row.sd = std::sqrt(std::max(0.0, second - row.mean * row.mean));
    row.ci_low = std::exp(m.quantile(0.025));
    row.ci_high = std::exp(m.quantile(0.975));
    row.has_p = false;
    rows.push_back(row);
  }
  return rows;
}

std::vector<SummaryRow> summary_from_draws(const Eigen::MatrixXd& pooled,
                                           const Dataset& d) {
  const int n_coef = d.p_incidence() + d.p_latency();
  if (pooled.cols() != n_coef + 1)
    throw ContractError("summary_from_draws: draw matrix must hold the coefficients "
                        "plus the log shape");
  if (pooled.rows() < 2)
    throw ContractError("summary_from_draws: need at least two draws");

  const std::vector<std::string> names = parameter_names(d);
  const int n = static_cast<int>(pooled.rows());
  std::vector<SummaryRow> rows;
  for (int j = 0; j < n_coef; ++j) {
    std::vector<double> column(pooled.col(j).data(), pooled.col(j).data() + n);
    rows.push_back(row_from_column(names[j], std::move(column), true));
  }

  std::vector<double> alpha(n);
  for (int i = 0; i < n; ++i) alpha[i] = std::exp(pooled(i, n_coef));
  rows.push_back(row_from_column("alpha", std::move(alpha), false));

  if (wants_exp_intercept_row(d)) {
    std::vector<double> scale(n);
    for (int i = 0; i < n; ++i) scale[i] = std::exp(pooled(i, d.p_incidence()));
    rows.push_back(row_from_column(names.back(), std::move(scale), false));
  }
  return rows;
}

std::vector<SurvivalRow> survival_grid(const std::vector<SurvivalCurve>& curves) {
  constexpr double kSlack = 1e-9;
  std::vector<SurvivalRow> rows;
  for (const auto& curve : curves) {
    if (curve.time.size() != curve.mean_survival.size())
      throw ContractError("survival_grid: time and survival lengths differ for "
                          "profile '" + curve.profile + "'");
    double previous = 1.0 + kSlack;
    for (std::size_t i = 0; i < curve.time.size(); ++i) {
      const double s = curve.mean_survival[i];
      if (!(s >= -kSlack && s <= 1.0 + kSlack))
        throw ContractError("survival_grid: survival outside [0, 1] for profile '" +
                            curve.profile + "'");
      if (s > previous + kSlack)
        throw ContractError("survival_grid: survival increases along the time grid "
                            "for profile '" + curve.profile + "'");
      const double clean = std::min({std::max(s, 0.0), 1.0, std::max(previous, 0.0)});
      rows.push_back({curve.time[i], curve.profile, clean});
      previous = clean;
    }
  }
  return rows;
}

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows) {
  auto out = open_for_write(path);
  out << "parameter,mean,sd,ci_low,ci_high,p_gt_0\n";
  for (const auto& row : rows) {
    out << row.parameter << ',' << format_stat(row.mean) << ',' << format_stat(row.sd)
        << ',' << format_stat(row.ci_low) << ',' << format_stat(row.ci_high) << ','
        << (row.has_p ? format_stat(row.p_gt_0) : std::string("-")) << '\n';
  }
  if (!out) throw DataError("short write to '" + path + "'");
}

void write_cure_csv(const std::string& path, const std::vector<CureEstimate>& rows) {
  auto out = open_for_write(path);
  out << "profile,mean,sd,ci_low,ci_high\n";
  for (const auto& row : rows) {
    out << row.profile << ',' << format_stat(row.mean) << ',' << format_stat(row.sd)
        << ',' << format_stat(row.ci_low) << ',' << format_stat(row.ci_high) << '\n';
  }
  if (!out) throw DataError("short write to '" + path + "'");
}

void write_survival_csv(const std::string& path, const std::vector<SurvivalRow>& rows) {
  auto out = open_for_write(path);
  out << "t,group,mean_survival\n";
  for (const auto& row : rows) {
    out << printf_value("%.6g", row.time) << ',' << row.group << ','
        << format_stat(row.mean_survival) << '\n';
  }
  if (!out) throw DataError("short write to '" + path + "'");
}

void write_manifest(const std::string& path, const Manifest& manifest) {
  auto out = open_for_write(path);
  for (const auto& [key, value] : manifest) out << key << ": " << value << '\n';
  if (!out) throw DataError("short write to '" + path + "'");
}

std::string format_stat(double x) {
  std::string s = printf_value("%.3f", x);
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string format_exact(double x) { return printf_value("%.17g", x); }

}  // namespace curemix
