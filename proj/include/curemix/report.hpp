#ifndef CUREMIX_REPORT_HPP
#define CUREMIX_REPORT_HPP

#include <string>
#include <utility>
#include <vector>

#include "curemix/gibbs.hpp"

namespace curemix {

struct SummaryRow {
  std::string parameter;
  double mean = 0.0;
  double sd = 0.0;
  double ci_low = 0.0;   // equal-tailed 95% interval
  double ci_high = 0.0;
  double p_gt_0 = 0.0;   // posterior probability the parameter is positive
  bool has_p = true;     // false for scale-type rows, printed as "-"
};

/// Parameter display names in flat order, then "alpha"; PH fits with a
/// latency intercept also get the derived "exp(latency.<intercept>)" row.
std::vector<std::string> parameter_names(const Dataset& d);

/// Rows from averaged posterior marginals: one per coefficient, the derived
/// exponentiated latency intercept for PH fits, and alpha (no sign
/// probability for the scale-type rows).
std::vector<SummaryRow> summary_table(const AveragedPosterior& post, const Dataset& d);

/// Rows from pooled posterior draws (columns in flat order, log alpha last);
/// means/sds/quantiles are empirical.
std::vector<SummaryRow> summary_from_draws(const Eigen::MatrixXd& pooled, const Dataset& d);

struct SurvivalRow {
  double time = 0.0;
  std::string group;
  double mean_survival = 0.0;
};

/// Flattens curves to (t, group, mean) rows; enforces values in [0, 1] and
/// monotone non-increase within each group.
std::vector<SurvivalRow> survival_grid(const std::vector<SurvivalCurve>& curves);

/// Ordered key/value manifest recording everything needed to replay a run.
using Manifest = std::vector<std::pair<std::string, std::string>>;

void write_summary_csv(const std::string& path, const std::vector<SummaryRow>& rows);
void write_cure_csv(const std::string& path, const std::vector<CureEstimate>& rows);
void write_survival_csv(const std::string& path, const std::vector<SurvivalRow>& rows);
void write_manifest(const std::string& path, const Manifest& manifest);

/// Fixed 3-decimal, period-separated, locale-independent number rendering;
/// negative zero is normalized to "0.000".
std::string format_stat(double x);

/// Shortest round-trip-safe rendering (17 significant digits) for manifests.
std::string format_exact(double x);

}  // namespace curemix

#endif  // CUREMIX_REPORT_HPP
