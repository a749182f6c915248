#include "curemix/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <json.hpp>

#include "curemix/model.hpp"
#include "curemix/rng.hpp"

namespace curemix {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(trimmed(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  out.push_back(trimmed(current));
  return out;
}

double parse_number(const std::string& field, int line_no, const std::string& column) {
  if (field.empty())
    throw DataError("line " + std::to_string(line_no) + ": missing value in column '" +
                    column + "'");
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw DataError("line " + std::to_string(line_no) + ": non-numeric value '" + field +
                    "' in column '" + column + "'");
  return value;
}

int column_index(const std::vector<std::string>& header, const std::string& name,
                 const std::string& role) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    throw DataError(role + " column '" + name + "' not found in the header");
  return static_cast<int>(it - header.begin());
}

std::string render_value(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  for (char& ch : buf)
    if (ch == ',') ch = '.';
  return buf;
}

}  // namespace

Dataset read_dataset(const std::string& path, const ColumnSchema& schema) {
  if (schema.family == LatencyFamily::weibull_aft && !schema.latency_intercept)
    throw DataError("the AFT family requires a latency intercept");

  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "' is empty; expected a header row");
  const std::vector<std::string> header = split_fields(line);
  for (std::size_t a = 0; a < header.size(); ++a)
    for (std::size_t b = a + 1; b < header.size(); ++b)
      if (header[a] == header[b])
        throw DataError("duplicate column '" + header[a] + "' in the header");

  // Covariate columns in first-use order across both model parts.
  std::vector<std::string> covariates;
  const auto note_covariate = [&](const std::string& name) {
    if (std::find(covariates.begin(), covariates.end(), name) == covariates.end())
      covariates.push_back(name);
  };
  for (const auto& name : schema.incidence_cov) note_covariate(name);
  for (const auto& name : schema.latency_cov) note_covariate(name);

  const int time_idx = column_index(header, schema.time_col, "time");
  const int status_idx = column_index(header, schema.status_col, "status");
  std::map<std::string, int> cov_idx;
  for (const auto& name : covariates)
    cov_idx[name] = column_index(header, name, "covariate");
  for (const auto& name : schema.center_cols)
    if (!cov_idx.count(name))
      throw DataError("centering column '" + name + "' is not among the covariates");

  std::vector<double> times;
  std::vector<int> events;
  std::map<std::string, std::vector<double>> cov_values;
  for (const auto& name : covariates) cov_values[name] = {};

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    const double t = parse_number(fields[time_idx], line_no, schema.time_col);
    if (!(t > 0.0))
      throw DataError("line " + std::to_string(line_no) + ": time must be positive, got '" +
                      fields[time_idx] + "'");
    double status = parse_number(fields[status_idx], line_no, schema.status_col);
    if (status != 0.0 && status != 1.0)
      throw DataError("line " + std::to_string(line_no) + ": status must be 0 or 1, got '" +
                      fields[status_idx] + "'");
    if (schema.flip_status) status = 1.0 - status;
    times.push_back(t);
    events.push_back(static_cast<int>(status));
    for (const auto& name : covariates)
      cov_values[name].push_back(parse_number(fields[cov_idx[name]], line_no, name));
  }
  const int n = static_cast<int>(times.size());
  if (n == 0) throw DataError("'" + path + "' holds a header but no data rows");

  Dataset d;
  d.family = schema.family;
  d.time = Eigen::Map<Eigen::VectorXd>(times.data(), n);
  d.event = Eigen::Map<Eigen::VectorXi>(events.data(), n);

  // Raw (uncentered) columns for round-trip writes.
  d.column_names.push_back(schema.time_col);
  d.column_names.push_back(schema.status_col);
  d.columns.push_back(d.time);
  Eigen::VectorXd raw_status(n);
  for (int i = 0; i < n; ++i)
    raw_status[i] = schema.flip_status ? 1.0 - events[i] : events[i];
  d.columns.push_back(raw_status);

  std::map<std::string, Eigen::VectorXd> centered;
  for (const auto& name : covariates) {
    Eigen::VectorXd column = Eigen::Map<Eigen::VectorXd>(cov_values[name].data(), n);
    d.column_names.push_back(name);
    d.columns.push_back(column);
    if (std::find(schema.center_cols.begin(), schema.center_cols.end(), name) !=
        schema.center_cols.end()) {
      const double mean = column.mean();
      column.array() -= mean;
      d.centering_means[name] = mean;
    }
    if ((column.array() == column[0]).all())
      d.warnings.push_back("covariate '" + name +
                           "' is constant across subjects; only the prior identifies "
                           "its coefficient");
    centered[name] = std::move(column);
  }

  const int p1 = 1 + static_cast<int>(schema.incidence_cov.size());
  d.incidence_design.resize(n, p1);
  d.incidence_design.col(0).setOnes();
  d.incidence_names.push_back("(Intercept)");
  for (std::size_t j = 0; j < schema.incidence_cov.size(); ++j) {
    d.incidence_design.col(1 + static_cast<int>(j)) = centered[schema.incidence_cov[j]];
    d.incidence_names.push_back(schema.incidence_cov[j]);
  }

  const int latency_offset = schema.latency_intercept ? 1 : 0;
  const int p2 = latency_offset + static_cast<int>(schema.latency_cov.size());
  if (p2 == 0)
    throw DataError("the latency part has no columns; add covariates or keep the intercept");
  d.latency_design.resize(n, p2);
  if (schema.latency_intercept) {
    d.latency_design.col(0).setOnes();
    d.latency_names.push_back("(Intercept)");
  }
  for (std::size_t j = 0; j < schema.latency_cov.size(); ++j) {
    d.latency_design.col(latency_offset + static_cast<int>(j)) =
        centered[schema.latency_cov[j]];
    d.latency_names.push_back(schema.latency_cov[j]);
  }

  d.validate();
  return d;
}

void write_dataset(const Dataset& d, const std::string& path) {
  if (d.column_names.empty() || d.column_names.size() != d.columns.size())
    throw ContractError("write_dataset: dataset carries no raw columns");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (std::size_t j = 0; j < d.column_names.size(); ++j)
    out << (j ? "," : "") << d.column_names[j];
  out << "\n";
  for (int i = 0; i < d.n(); ++i) {
    for (std::size_t j = 0; j < d.columns.size(); ++j)
      out << (j ? "," : "") << render_value(d.columns[j][i]);
    out << "\n";
  }
  if (!out) throw DataError("short write to '" + path + "'");
}

void SimulationSpec::validate() const {
  if (n < 1) throw ContractError("SimulationSpec: n must be at least 1");
  if (!(shape > 0.0)) throw ContractError("SimulationSpec: shape must be positive");
  const int k = static_cast<int>(covariates.size());
  if (incidence_coef.size() != 1 + k)
    throw ContractError("SimulationSpec: incidence_coef needs an intercept plus one "
                        "entry per covariate");
  const int expected_latency = (latency_intercept ? 1 : 0) + k;
  if (latency_coef.size() != expected_latency || expected_latency == 0)
    throw ContractError("SimulationSpec: latency_coef length does not match the "
                        "covariates and intercept flag");
  if (family == LatencyFamily::weibull_aft && !latency_intercept)
    throw ContractError("SimulationSpec: the AFT family requires a latency intercept");
  for (const auto& cov : covariates)
    if (cov.kind == CovariateGenerator::Kind::bernoulli &&
        !(cov.param > 0.0 && cov.param < 1.0))
      throw ContractError("SimulationSpec: bernoulli covariate probability must lie in (0,1)");
  if (!(admin_censor_time > 0.0))
    throw ContractError("SimulationSpec: administrative censoring time must be positive");
  if (exp_censor_rate < 0.0)
    throw ContractError("SimulationSpec: exponential censoring rate cannot be negative");
}

namespace {

/// P(censoring preempts the event | susceptible, covariates), given an
/// administrative cutoff and/or an exponential censoring draw.
double censored_probability_susceptible(double log_rate_term, double alpha,
                                        double admin, double exp_rate) {
  const auto uncured_survival = [&](double t) {
    return std::exp(-std::exp(alpha * std::log(t) + log_rate_term));
  };
  if (exp_rate <= 0.0) return std::isfinite(admin) ? uncured_survival(admin) : 0.0;
  const double upper = std::min(admin, 50.0 / exp_rate);
  constexpr int kPanels = 4096;
  const double h = upper / kPanels;
  double acc = exp_rate * uncured_survival(1e-300) +
               exp_rate * std::exp(-exp_rate * upper) * uncured_survival(upper);
  for (int j = 1; j < kPanels; ++j) {
    const double c = j * h;
    acc += (j % 2 == 1 ? 4.0 : 2.0) * exp_rate * std::exp(-exp_rate * c) *
           uncured_survival(c);
  }
  double p = acc * h / 3.0;
  if (std::isfinite(admin) && admin <= upper + h)
    p += std::exp(-exp_rate * admin) * uncured_survival(admin);
  else
    p += std::exp(-exp_rate * upper) * uncured_survival(upper);
  return std::min(p, 1.0);
}

}  // namespace

std::pair<Dataset, SimTruth> simulate(const SimulationSpec& spec) {
  spec.validate();
  const int k = static_cast<int>(spec.covariates.size());
  std::vector<std::string> names(k);
  for (int j = 0; j < k; ++j)
    names[j] = spec.covariates[j].name.empty() ? "x" + std::to_string(j + 1)
                                               : spec.covariates[j].name;

  Rng rng(Rng::mix(spec.seed));
  const double alpha = spec.shape;

  Dataset d;
  d.family = spec.family;
  d.time.resize(spec.n);
  d.event.resize(spec.n);
  const int p1 = 1 + k;
  const int p2 = (spec.latency_intercept ? 1 : 0) + k;
  d.incidence_design.resize(spec.n, p1);
  d.latency_design.resize(spec.n, p2);

  SimTruth truth;
  truth.seed = spec.seed;
  truth.truth.incidence_coef = spec.incidence_coef;
  truth.truth.latency_coef = spec.latency_coef;
  truth.truth.log_shape = std::log(alpha);
  truth.z.resize(spec.n);
  double expected_censored = 0.0;

  for (int i = 0; i < spec.n; ++i) {
    d.incidence_design(i, 0) = 1.0;
    for (int j = 0; j < k; ++j) {
      const auto& cov = spec.covariates[j];
      const double value = cov.kind == CovariateGenerator::Kind::normal
                               ? rng.normal()
                               : static_cast<double>(rng.bernoulli(cov.param));
      d.incidence_design(i, 1 + j) = value;
      if (spec.latency_intercept) {
        d.latency_design(i, 0) = 1.0;
        d.latency_design(i, 1 + j) = value;
      } else {
        d.latency_design(i, j) = value;
      }
    }
    if (k == 0 && spec.latency_intercept) d.latency_design(i, 0) = 1.0;

    const double eta =
        incidence_prob(spec.incidence_coef, d.incidence_design.row(i).transpose());
    const int cured = rng.bernoulli(eta);
    truth.z[i] = cured;

    double censor_time = spec.admin_censor_time;
    if (spec.exp_censor_rate > 0.0)
      censor_time = std::min(censor_time, rng.exponential(spec.exp_censor_rate));

    const double g = spec.latency_coef.dot(d.latency_design.row(i).transpose());
    if (cured) {
      if (!std::isfinite(censor_time))
        throw DataError(
            "simulate: a cured subject drew an infinite censoring time; enable "
            "administrative or exponential censoring when the cure probability is positive");
      d.time[i] = censor_time;
      d.event[i] = 0;
    } else {
      const double event_time =
          std::exp((std::log(rng.exponential(1.0)) - g) / alpha);
      d.time[i] = std::min(event_time, censor_time);
      d.event[i] = event_time <= censor_time ? 1 : 0;
    }
    expected_censored +=
        eta + (1.0 - eta) * censored_probability_susceptible(
                                g, alpha, spec.admin_censor_time, spec.exp_censor_rate);
  }
  truth.expected_censored = expected_censored;
  if (expected_censored < 1.0)
    d.warnings.push_back(
        "fewer than one censored subject expected under this censoring spec; the cure "
        "fraction is practically unidentifiable");

  if (spec.exp_censor_rate > 0.0 && std::isfinite(spec.admin_censor_time))
    truth.censoring = "min(administrative " + render_value(spec.admin_censor_time) +
                      ", exponential rate " + render_value(spec.exp_censor_rate) + ")";
  else if (spec.exp_censor_rate > 0.0)
    truth.censoring = "exponential rate " + render_value(spec.exp_censor_rate);
  else if (std::isfinite(spec.admin_censor_time))
    truth.censoring = "administrative at " + render_value(spec.admin_censor_time);
  else
    truth.censoring = "none";

  d.incidence_names.push_back("(Intercept)");
  if (spec.latency_intercept) d.latency_names.push_back("(Intercept)");
  for (int j = 0; j < k; ++j) {
    d.incidence_names.push_back(names[j]);
    d.latency_names.push_back(names[j]);
  }
  d.column_names.push_back("time");
  d.column_names.push_back("status");
  d.columns.push_back(d.time);
  d.columns.push_back(d.event.cast<double>());
  for (int j = 0; j < k; ++j) {
    d.column_names.push_back(names[j]);
    d.columns.push_back(d.incidence_design.col(1 + j));
  }
  d.validate();
  return {std::move(d), std::move(truth)};
}

std::string truth_to_json(const SimTruth& truth, const SimulationSpec& spec) {
  nlohmann::ordered_json j;
  j["seed"] = truth.seed;
  j["n"] = spec.n;
  j["family"] = family_name(spec.family);
  j["shape"] = spec.shape;
  j["incidence_coef"] = std::vector<double>(
      spec.incidence_coef.data(), spec.incidence_coef.data() + spec.incidence_coef.size());
  j["latency_coef"] = std::vector<double>(
      spec.latency_coef.data(), spec.latency_coef.data() + spec.latency_coef.size());
  j["latency_intercept"] = spec.latency_intercept;
  nlohmann::ordered_json covs = nlohmann::ordered_json::array();
  for (const auto& cov : spec.covariates) {
    nlohmann::ordered_json c;
    c["name"] = cov.name;
    c["kind"] = cov.kind == CovariateGenerator::Kind::normal ? "normal" : "bernoulli";
    if (cov.kind == CovariateGenerator::Kind::bernoulli) c["probability"] = cov.param;
    covs.push_back(c);
  }
  j["covariates"] = covs;
  j["censoring"] = truth.censoring;
  if (std::isfinite(spec.admin_censor_time))
    j["admin_censor_time"] = spec.admin_censor_time;
  if (spec.exp_censor_rate > 0.0) j["exp_censor_rate"] = spec.exp_censor_rate;
  j["expected_censored"] = truth.expected_censored;
  j["z"] = std::vector<int>(truth.z.data(), truth.z.data() + truth.z.size());
  return j.dump(2) + "\n";
}

}  // namespace curemix
