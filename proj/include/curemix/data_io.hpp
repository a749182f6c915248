#ifndef CUREMIX_DATA_IO_HPP
#define CUREMIX_DATA_IO_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "curemix/types.hpp"

namespace curemix {

/// Column roles for reading a delimited survival file.
struct ColumnSchema {
  std::string time_col = "time";
  std::string status_col = "status";
  std::vector<std::string> incidence_cov;  // covariate column names, no intercept
  std::vector<std::string> latency_cov;
  std::vector<std::string> center_cols;    // subtract the sample mean of these
  LatencyFamily family = LatencyFamily::weibull_ph;
  bool latency_intercept = true;  // optional for PH, mandatory for AFT
  bool flip_status = false;       // set when the file codes 1 = censored
};

/// Parses comma-separated UTF-8 text with one header row. Status must be 0/1
/// (1 = event after any flip), times positive; errors name the offending file
/// line. An all-ones intercept is prepended to the incidence design and, per
/// the schema, to the latency design.
Dataset read_dataset(const std::string& path, const ColumnSchema& schema);

/// Writes the originally read (uncentered) columns back out; numeric content
/// round-trips to 12 significant digits.
void write_dataset(const Dataset& d, const std::string& path);

struct CovariateGenerator {
  enum class Kind { normal, bernoulli };
  Kind kind = Kind::normal;
  double param = 0.5;  // bernoulli success probability; normal is standard
  std::string name;
};

struct SimulationSpec {
  int n = 100;
  Eigen::VectorXd incidence_coef;  // intercept first, then one per covariate
  Eigen::VectorXd latency_coef;    // intercept first when latency_intercept
  double shape = 1.0;              // Weibull alpha
  LatencyFamily family = LatencyFamily::weibull_ph;
  bool latency_intercept = true;
  std::vector<CovariateGenerator> covariates;  // shared by both model parts
  double admin_censor_time = std::numeric_limits<double>::infinity();
  double exp_censor_rate = 0.0;  // 0 disables the exponential censoring draw
  std::uint64_t seed = 1;

  void validate() const;
};

/// Generating truth recorded alongside a simulated dataset.
struct SimTruth {
  ParameterPoint truth;
  Eigen::VectorXi z;  // true cure indicators
  std::string censoring;
  std::uint64_t seed = 0;
  double expected_censored = 0.0;
};

/// Draws covariates, cure indicators, event times, and censoring times;
/// bit-identical output for identical specs. Cured subjects must be
/// censorable: with eta > 0 the spec needs a finite censoring mechanism.
std::pair<Dataset, SimTruth> simulate(const SimulationSpec& spec);

/// Serializes the truth record as JSON (stable key order).
std::string truth_to_json(const SimTruth& truth, const SimulationSpec& spec);

}  // namespace curemix

#endif  // CUREMIX_DATA_IO_HPP
