#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "testutil.hpp"

using testutil::read_file;
using testutil::run_cli;

namespace {

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  fields.push_back(current);
  return fields;
}

// Manifest lines are "key: value"; repeated keys keep the first occurrence.
std::map<std::string, std::string> parse_manifest(const std::string& path) {
  std::map<std::string, std::string> kv;
  for (const auto& line : split_lines(read_file(path))) {
    const std::size_t sep = line.find(": ");
    if (sep == std::string::npos) continue;
    kv.emplace(line.substr(0, sep), line.substr(sep + 2));
  }
  return kv;
}

bool contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

// Simulates a 24-subject dataset with one binary covariate and late
// administrative censoring (decisive cure classifications, so the modal
// chain stabilizes); reused by the fit/mcmc/compare cases.
std::string shared_dataset() {
  static std::string path;
  if (!path.empty()) return path;
  const std::string dir = testutil::make_temp_dir();
  const int code = run_cli({"simulate", "--n", "24", "--incidence-coef", "-0.3,0.5",
                            "--latency-coef", "0.1,-0.4", "--shape", "1.2",
                            "--covariate", "trt:bernoulli:0.5", "--admin-censor", "8",
                            "--seed", "5", "--out", dir});
  REQUIRE(code == 0);
  path = dir + "/data.csv";
  return path;
}

}  // namespace

TEST_CASE("help exits zero on every subcommand and documents the flags") {
  std::string out;
  CHECK(run_cli({"--help"}, &out) == 0);
  for (const char* sub : {"fit", "mcmc", "oracle", "simulate", "compare"})
    CHECK(contains(out, sub));

  CHECK(run_cli({"fit", "--help"}, &out) == 0);
  for (const char* flag :
       {"--data", "--time-col", "--status-col", "--incidence-cov", "--latency-cov",
        "--center", "--family", "--flip-status", "--no-latency-intercept",
        "--coef-variance", "--shape-a", "--shape-b", "--burnin", "--keep", "--thin",
        "--grid-size", "--seed", "--profile", "--time-points", "--time-max", "--draws",
        "--out"})
    CHECK(contains(out, flag));

  CHECK(run_cli({"mcmc", "--help"}, &out) == 0);
  for (const char* flag : {"--data", "--chains", "--iters", "--burnin", "--thin",
                           "--seed", "--out"})
    CHECK(contains(out, flag));

  CHECK(run_cli({"oracle", "--help"}, &out) == 0);
  CHECK(contains(out, "--quad-points"));

  CHECK(run_cli({"simulate", "--help"}, &out) == 0);
  for (const char* flag : {"--n", "--incidence-coef", "--latency-coef", "--shape",
                           "--family", "--covariate", "--admin-censor",
                           "--exp-censor-rate", "--seed", "--out"})
    CHECK(contains(out, flag));

  CHECK(run_cli({"compare", "--help"}, &out) == 0);
  for (const char* flag : {"--mcmc-burnin", "--mcmc-thin", "--chains", "--iters"})
    CHECK(contains(out, flag));
}

TEST_CASE("usage problems exit with code one") {
  std::string out;
  CHECK(run_cli({}, &out) == 1);                       // a subcommand is required
  CHECK(run_cli({"frobnicate"}, &out) == 1);           // unknown subcommand
  CHECK(run_cli({"fit"}, &out) == 1);                  // --data is required
  CHECK(contains(out, "--data"));
  CHECK(run_cli({"fit", "--data", "x.csv", "--grid-size", "500"}, &out) == 1);
  CHECK(run_cli({"simulate", "--n", "0"}, &out) == 1);
  CHECK(run_cli({"mcmc", "--data", "x.csv", "--chains", "1"}, &out) == 1);
}

TEST_CASE("identical simulate invocations write identical files") {
  const std::string dir_a = testutil::make_temp_dir();
  const std::string dir_b = testutil::make_temp_dir();
  const std::vector<std::string> base{"simulate", "--n", "50", "--seed", "7",
                                      "--covariate", "age:normal",
                                      "--incidence-coef", "0.2,-0.1",
                                      "--latency-coef", "0,0.3"};

  auto with_out = [&](const std::string& dir) {
    std::vector<std::string> args = base;
    args.insert(args.end(), {"--out", dir});
    return args;
  };
  REQUIRE(run_cli(with_out(dir_a)) == 0);
  REQUIRE(run_cli(with_out(dir_b)) == 0);

  CHECK(read_file(dir_a + "/data.csv") == read_file(dir_b + "/data.csv"));
  CHECK(read_file(dir_a + "/truth.json") == read_file(dir_b + "/truth.json"));
  CHECK(!read_file(dir_a + "/data.csv").empty());

  // Re-running into the same directory reproduces every byte, manifest included.
  const std::string before = read_file(dir_a + "/manifest.txt");
  REQUIRE(run_cli(with_out(dir_a)) == 0);
  CHECK(read_file(dir_a + "/manifest.txt") == before);

  // A different seed changes the data.
  std::vector<std::string> reseeded = with_out(dir_b);
  reseeded[4] = "8";
  REQUIRE(run_cli(reseeded) == 0);
  CHECK(read_file(dir_a + "/data.csv") != read_file(dir_b + "/data.csv"));
}

TEST_CASE("fit on a dataset without censoring exits two with a clear message") {
  const std::string dir = testutil::make_temp_dir();
  testutil::write_file(dir + "/events.csv",
                       "time,status\n0.5,1\n1.2,1\n2.0,1\n3.3,1\n");
  std::string out;
  CHECK(run_cli({"fit", "--data", dir + "/events.csv", "--out", dir}, &out) == 2);
  CHECK(contains(out, "no censored subjects"));
}

TEST_CASE("data problems exit with code two") {
  const std::string dir = testutil::make_temp_dir();
  std::string out;
  CHECK(run_cli({"fit", "--data", dir + "/absent.csv", "--out", dir}, &out) == 2);
  CHECK(contains(out, "cannot open"));

  testutil::write_file(dir + "/bad.csv", "time,status\n-1,0\n");
  CHECK(run_cli({"fit", "--data", dir + "/bad.csv", "--out", dir}, &out) == 2);
  CHECK(contains(out, "line 2"));

  // Valid flag range but an invalid quadrature shape is a data-level error.
  CHECK(run_cli({"fit", "--data", shared_dataset(), "--grid-size", "4", "--out", dir},
                &out) == 2);
  CHECK(contains(out, "odd"));

  CHECK(run_cli({"simulate", "--covariate", "x:poisson", "--incidence-coef", "0,0",
                 "--latency-coef", "0,0", "--out", dir}, &out) == 2);
  CHECK(contains(out, "unknown generator"));

  // Contract violations inside an otherwise well-formed invocation are
  // data-level failures, not usage errors.
  CHECK(run_cli({"simulate", "--family", "weibull-aft", "--no-latency-intercept",
                 "--latency-coef", "", "--out", dir}, &out) == 2);
  CHECK(contains(out, "latency"));
}

TEST_CASE("fit writes the artifact set, reruns byte-identically, and replays from its manifest") {
  const std::string data = shared_dataset();
  const std::string out_dir = testutil::make_temp_dir();
  const std::vector<std::string> fit_args{
      "fit",           "--data",      data,
      "--incidence-cov", "trt",       "--latency-cov", "trt",
      "--coef-variance", "4",         "--burnin",      "30",
      "--keep",        "60",          "--thin",        "2",
      "--seed",        "2",           "--time-points", "12",
      "--draws",       "400",         "--profile",     "baseline",
      "--profile",     "typical:trt=1"};

  auto run_into = [&](const std::string& dir) {
    std::vector<std::string> args = fit_args;
    args.insert(args.end(), {"--out", dir});
    std::string out;
    const int code = run_cli(args, &out);
    INFO(out);
    return code;
  };
  REQUIRE(run_into(out_dir) == 0);

  const std::string summary = read_file(out_dir + "/summary.csv");
  const auto summary_lines = split_lines(summary);
  REQUIRE(summary_lines.size() == 7);  // header + 4 coefficients + alpha + scale
  CHECK(summary_lines[0] == "parameter,mean,sd,ci_low,ci_high,p_gt_0");
  CHECK(contains(summary_lines[1], "incidence.(Intercept),"));
  CHECK(contains(summary_lines[2], "incidence.trt,"));
  CHECK(contains(summary_lines[3], "latency.(Intercept),"));
  CHECK(contains(summary_lines[4], "latency.trt,"));
  CHECK(contains(summary_lines[5], "alpha,"));
  CHECK(contains(summary_lines[6], "exp(latency.(Intercept)),"));
  CHECK(contains(summary_lines[5], ",-"));  // no sign probability for alpha

  const auto cure_lines = split_lines(read_file(out_dir + "/cure.csv"));
  REQUIRE(cure_lines.size() == 3);
  CHECK(cure_lines[0] == "profile,mean,sd,ci_low,ci_high");
  CHECK(contains(cure_lines[1], "baseline,"));
  CHECK(contains(cure_lines[2], "typical,"));
  for (std::size_t r = 1; r < cure_lines.size(); ++r) {
    const auto f = split_csv(cure_lines[r]);
    const double mean = std::stod(f[1]);
    CHECK(mean >= 0.0);
    CHECK(mean <= 1.0);
    CHECK(std::stod(f[3]) <= std::stod(f[4]));
  }

  const auto surv_lines = split_lines(read_file(out_dir + "/survival.csv"));
  REQUIRE(surv_lines.size() == 25);  // header + 2 profiles x 12 points
  CHECK(surv_lines[0] == "t,group,mean_survival");
  double previous = 1.0;
  for (std::size_t r = 1; r <= 12; ++r) {
    const auto f = split_csv(surv_lines[r]);
    CHECK(f[1] == "baseline");
    const double s = std::stod(f[2]);
    CHECK(s <= previous);
    previous = s;
  }

  const auto manifest = parse_manifest(out_dir + "/manifest.txt");
  CHECK(manifest.at("command") == "fit");
  CHECK(manifest.at("seed") == "2");
  CHECK(manifest.at("data") == data);
  CHECK(manifest.at("converged") == "yes");
  CHECK(!manifest.at("cml-trace").empty());

  // Same flags, fresh directory: every artifact reproduces byte-for-byte.
  const std::string rerun_dir = testutil::make_temp_dir();
  REQUIRE(run_into(rerun_dir) == 0);
  for (const char* name : {"/summary.csv", "/cure.csv", "/survival.csv"})
    CHECK(read_file(rerun_dir + name) == read_file(out_dir + name));

  // The manifest alone is enough to reconstruct the invocation.
  std::vector<std::string> replay{"fit",
                                  "--data", manifest.at("data"),
                                  "--time-col", manifest.at("time-col"),
                                  "--status-col", manifest.at("status-col"),
                                  "--incidence-cov", manifest.at("incidence-cov"),
                                  "--latency-cov", manifest.at("latency-cov"),
                                  "--family", manifest.at("family"),
                                  "--coef-variance", manifest.at("coef-variance"),
                                  "--shape-a", manifest.at("shape-a"),
                                  "--shape-b", manifest.at("shape-b"),
                                  "--burnin", manifest.at("burnin"),
                                  "--keep", manifest.at("keep"),
                                  "--thin", manifest.at("thin"),
                                  "--grid-size", manifest.at("grid-size"),
                                  "--seed", manifest.at("seed"),
                                  "--time-points", manifest.at("time-points"),
                                  "--time-max", manifest.at("time-max"),
                                  "--draws", manifest.at("draws")};
  std::vector<std::string> profile_list;
  {
    std::string value = manifest.at("profile");
    std::size_t start = 0;
    while (start < value.size()) {
      std::size_t sep = value.find(" | ", start);
      if (sep == std::string::npos) sep = value.size();
      profile_list.push_back(value.substr(start, sep - start));
      start = sep + 3;
    }
  }
  for (const auto& p : profile_list) replay.insert(replay.end(), {"--profile", p});
  const std::string replay_dir = testutil::make_temp_dir();
  replay.insert(replay.end(), {"--out", replay_dir});
  std::string replay_out;
  REQUIRE(run_cli(replay, &replay_out) == 0);
  for (const char* name : {"/summary.csv", "/cure.csv", "/survival.csv"})
    CHECK(read_file(replay_dir + name) == read_file(out_dir + name));
}

TEST_CASE("the sampler subcommand writes a summary and diagnostics manifest") {
  const std::string out_dir = testutil::make_temp_dir();
  std::string out;
  const int code = run_cli({"mcmc", "--data", shared_dataset(), "--incidence-cov",
                            "trt", "--latency-cov", "trt", "--coef-variance", "4",
                            "--chains", "2", "--iters", "4000", "--burnin", "1000",
                            "--seed", "4", "--out", out_dir},
                           &out);
  INFO(out);
  REQUIRE(code == 0);

  const auto lines = split_lines(read_file(out_dir + "/summary.csv"));
  REQUIRE(lines.size() == 7);
  CHECK(lines[0] == "parameter,mean,sd,ci_low,ci_high,p_gt_0");

  const auto manifest = parse_manifest(out_dir + "/manifest.txt");
  CHECK(manifest.at("command") == "mcmc");
  CHECK(manifest.at("converged") == "yes");
  CHECK(manifest.count("psrf.incidence.(Intercept)") == 1);
  CHECK(manifest.count("ess.log(alpha)") == 1);
  CHECK(manifest.count("accept-rate.latency.trt") == 1);
  CHECK(std::stod(manifest.at("psrf.incidence.trt")) < 1.1);

  // This subcommand emits no derived-quantity tables.
  CHECK(read_file(out_dir + "/cure.csv").empty());
  CHECK(read_file(out_dir + "/survival.csv").empty());
}

TEST_CASE("the enumeration subcommand labels configurations in binary order") {
  const std::string dir = testutil::make_temp_dir();
  testutil::write_file(dir + "/tiny.csv",
                       "time,status\n"
                       "0.5,1\n0.9,1\n1.4,1\n1.9,1\n2.8,0\n3.3,0\n");
  const std::string out_dir = testutil::make_temp_dir();
  std::string out;
  const int code = run_cli({"oracle", "--data", dir + "/tiny.csv", "--coef-variance",
                            "4", "--shape-a", "2", "--shape-b", "2", "--quad-points",
                            "61", "--out", out_dir},
                           &out);
  INFO(out);
  REQUIRE(code == 0);

  const auto lines = split_lines(read_file(out_dir + "/configs.csv"));
  REQUIRE(lines.size() == 5);  // header + 2^2 configurations
  CHECK(lines[0] == "index,censored_z,probability,log_evidence");
  CHECK(split_csv(lines[1])[1] == "00");
  CHECK(split_csv(lines[2])[1] == "10");
  CHECK(split_csv(lines[3])[1] == "01");
  CHECK(split_csv(lines[4])[1] == "11");
  double total = 0.0;
  for (int r = 1; r <= 4; ++r) total += std::stod(split_csv(lines[r])[2]);
  CHECK(std::abs(total - 1.0) < 1e-9);

  const auto manifest = parse_manifest(out_dir + "/manifest.txt");
  CHECK(manifest.at("command") == "oracle");
  CHECK(manifest.at("configurations") == "4");
  CHECK(manifest.at("quad-points") == "61");
  CHECK(!manifest.at("log-evidence").empty());
  CHECK(split_lines(read_file(out_dir + "/summary.csv")).size() == 5);

  // Too many censored subjects for enumeration is a data error.
  std::string big = "time,status\n";
  for (int i = 0; i < 13; ++i) big += "2.5,0\n";
  big += "0.5,1\n";
  testutil::write_file(dir + "/wide.csv", big);
  CHECK(run_cli({"oracle", "--data", dir + "/wide.csv", "--out", out_dir}, &out) == 2);
}

TEST_CASE("compare runs both engines and tabulates their gap") {
  const std::string out_dir = testutil::make_temp_dir();
  std::string out;
  const int code = run_cli({"compare", "--data", shared_dataset(), "--incidence-cov",
                            "trt", "--latency-cov", "trt", "--coef-variance", "4",
                            "--burnin", "30", "--keep", "60", "--thin", "2",
                            "--chains", "2", "--iters", "6000", "--mcmc-burnin",
                            "1500", "--seed", "3", "--out", out_dir},
                           &out);
  INFO(out);
  REQUIRE(code == 0);

  const auto fit_lines = split_lines(read_file(out_dir + "/summary_fit.csv"));
  const auto mcmc_lines = split_lines(read_file(out_dir + "/summary_mcmc.csv"));
  REQUIRE(fit_lines.size() == 7);
  REQUIRE(mcmc_lines.size() == 7);

  const auto cmp_lines = split_lines(read_file(out_dir + "/comparison.csv"));
  REQUIRE(cmp_lines.size() == 7);
  CHECK(cmp_lines[0] == "parameter,fit_mean,mcmc_mean,abs_diff,fit_sd,mcmc_sd,mcmc_mcse");
  for (std::size_t r = 1; r < cmp_lines.size(); ++r) {
    const auto f = split_csv(cmp_lines[r]);
    REQUIRE(f.size() == 7);
    CHECK(f[0] == split_csv(fit_lines[r])[0]);
    const double fit_mean = std::stod(f[1]);
    const double mcmc_mean = std::stod(f[2]);
    const double abs_diff = std::stod(f[3]);
    // The printed difference is rounded independently of the printed means.
    CHECK(std::abs(abs_diff - std::abs(fit_mean - mcmc_mean)) < 1.5e-3);
    CHECK(std::stod(f[6]) >= 0.0);
  }

  const auto manifest = parse_manifest(out_dir + "/manifest.txt");
  CHECK(manifest.at("command") == "compare");
  CHECK(manifest.count("mcmc-burnin") == 1);
  CHECK(manifest.count("cml-trace") == 1);
  CHECK(manifest.count("psrf.log(alpha)") == 1);
}

TEST_CASE("profiles resolve covariates or fail with a named flag") {
  const std::string out_dir = testutil::make_temp_dir();
  std::string out;
  CHECK(run_cli({"fit", "--data", shared_dataset(), "--incidence-cov", "trt",
                 "--latency-cov", "trt", "--profile", "who:bmi=1", "--out", out_dir},
                &out) == 2);
  CHECK(contains(out, "--profile"));
  CHECK(contains(out, "bmi"));
}

TEST_CASE("simulation warnings surface on standard error") {
  const std::string out_dir = testutil::make_temp_dir();
  std::string out;
  const int code = run_cli({"simulate", "--n", "20", "--incidence-coef", "-40",
                            "--admin-censor", "inf", "--out", out_dir},
                           &out);
  REQUIRE(code == 0);
  CHECK(contains(out, "fewer than one censored subject expected"));
  const auto manifest = parse_manifest(out_dir + "/manifest.txt");
  CHECK(contains(manifest.at("warnings"), "fewer than one censored"));
  CHECK(manifest.at("censoring") == "none");
}
