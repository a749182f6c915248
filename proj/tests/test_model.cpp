#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "curemix/model.hpp"
#include "curemix/rng.hpp"
#include "testutil.hpp"

using namespace curemix;

namespace {

ParameterPoint point(double b1, double b2, double log_shape) {
  ParameterPoint p;
  p.incidence_coef = Eigen::VectorXd::Constant(1, b1);
  p.latency_coef = Eigen::VectorXd::Constant(1, b2);
  p.log_shape = log_shape;
  return p;
}

const Eigen::VectorXd kOne = Eigen::VectorXd::Ones(1);

}  // namespace

TEST_CASE("logistic link hits fixed points and saturates without overflow") {
  CHECK(logistic(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(incidence_prob(Eigen::VectorXd::Constant(1, -1.2), kOne) ==
        doctest::Approx(0.23147521650098238).epsilon(1e-12));
  const double high = incidence_prob(Eigen::VectorXd::Constant(1, 50.0), kOne);
  CHECK(high < 1.0);
  CHECK(high >= std::nextafter(1.0, 0.0));
  CHECK(std::isfinite(logistic(700.0)));
  CHECK(std::isfinite(logistic(-700.0)));
  CHECK(logistic(700.0) < 1.0);
  CHECK(logistic(-700.0) > 0.0);
}

TEST_CASE("log1p_exp and log_sum_exp are stable at the extremes") {
  CHECK(log1p_exp(1000.0) == doctest::Approx(1000.0).epsilon(1e-15));
  CHECK(log1p_exp(-1000.0) == doctest::Approx(0.0));
  CHECK(log1p_exp(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log_sum_exp({}) == -std::numeric_limits<double>::infinity());
  CHECK(log_sum_exp({-3.25}) == doctest::Approx(-3.25).epsilon(1e-15));
  CHECK(log_sum_exp({1000.0, 1000.0}) ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("uncured survival matches closed forms and is a proper survival curve") {
  CHECK(latency_survival(1e-12, point(0, 0, 0), kOne) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(latency_survival(1.0, point(0, 0, 0), kOne) ==
        doctest::Approx(0.36787944117144233).epsilon(1e-14));
  // alpha = 2, linear predictor log 3, t = 0.5: exp(-0.25 * 3)
  ParameterPoint p = point(0, std::log(3.0), std::log(2.0));
  CHECK(latency_survival(0.5, p, kOne) ==
        doctest::Approx(0.4723665527410147).epsilon(1e-14));

  Rng rng(7);
  for (int k = 0; k < 25; ++k) {
    const ParameterPoint q = point(0, rng.normal(), 0.4 * rng.normal());
    const double t = 0.05 + 3.0 * rng.uniform();
    const double dt = 1e-3;
    CHECK(latency_survival(t + dt, q, kOne) < latency_survival(t, q, kOne));
    CHECK(latency_survival(t, q, kOne) > 0.0);
    CHECK(latency_survival(t, q, kOne) <= 1.0);
    CHECK(latency_log_survival(t, q, kOne) ==
          doctest::Approx(std::log(latency_survival(t, q, kOne))).epsilon(1e-12));
  }
  CHECK_THROWS_AS(latency_survival(0.0, point(0, 0, 0), kOne), std::domain_error);
  CHECK_THROWS_AS(latency_survival(-1.0, point(0, 0, 0), kOne), std::domain_error);
}

TEST_CASE("uncured hazard matches closed forms and the survival derivative") {
  CHECK(latency_hazard(0.3, point(0, 0, 0), kOne) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(latency_hazard(7.7, point(0, 0, 0), kOne) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(latency_hazard(3.0, point(0, 0, std::log(2.0)), kOne) ==
        doctest::Approx(6.0).epsilon(1e-14));
  CHECK_THROWS_AS(latency_hazard(0.0, point(0, 0, 0), kOne), std::domain_error);

  // h(t) = -d/dt log S(t), central differences.
  const auto check_fd = [&](const ParameterPoint& q, double t) {
    const double h = 1e-6 * t;
    const double fd = -(latency_log_survival(t + h, q, kOne) -
                        latency_log_survival(t - h, q, kOne)) /
                      (2.0 * h);
    CHECK(latency_hazard(t, q, kOne) == doctest::Approx(fd).epsilon(1e-6));
  };
  check_fd(point(0, 0, std::log(1.5)), 2.0);
  Rng rng(11);
  for (int k = 0; k < 20; ++k)
    check_fd(point(0, rng.normal(), 0.4 * rng.normal()), 0.1 + 4.0 * rng.uniform());
}

TEST_CASE("population survival mixes the cured plateau with the uncured curve") {
  ParameterPoint p = point(std::log(3.0 / 7.0), 0.2, 0.1);
  CHECK(population_survival(1e-12, p, kOne, kOne) == doctest::Approx(1.0).epsilon(1e-9));

  // Far beyond the event scale, only the cured fraction remains.
  ParameterPoint q = point(std::log(0.3 / 0.7), 0.0, 0.0);
  const double eta = incidence_prob(q.incidence_coef, kOne);
  CHECK(eta == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(population_survival(1e6, q, kOne, kOne) == doctest::Approx(0.3).epsilon(1e-12));

  // eta = 0.25 and uncured survival 0.4 combine linearly.
  ParameterPoint r = point(std::log(1.0 / 3.0), 0.0, 0.0);
  const double t = -std::log(0.4);
  CHECK(latency_survival(t, r, kOne) == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(population_survival(t, r, kOne, kOne) == doctest::Approx(0.55).epsilon(1e-12));

  // population - eta is (1 - eta) * uncured at every t.
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    const double tt = 0.1 + 5.0 * rng.uniform();
    const double pop = population_survival(tt, r, kOne, kOne);
    const double su = latency_survival(tt, r, kOne);
    CHECK(pop - 0.25 == doctest::Approx(0.75 * su).epsilon(1e-12));
  }
}

TEST_CASE("complete-data log-likelihood matches hand evaluation and is additive") {
  // One event subject at t = 1 with eta = 0.5, unit exponential latency:
  // log(1 - eta) + log h(1) + log S(1) = log 0.5 + 0 - 1.
  Dataset d1 = testutil::make_dataset({1.0}, {1});
  LatentAssignment z1 = testutil::all_susceptible(d1);
  CHECK(complete_loglik(point(0, 0, 0), d1, z1) ==
        doctest::Approx(-1.6931471805599453).epsilon(1e-14));

  // One cured censored subject contributes log eta regardless of latency.
  Dataset dc = testutil::make_dataset({2.7}, {0});
  LatentAssignment zc;
  zc.z = Eigen::VectorXi::Constant(1, 1);
  const double base = complete_loglik(point(0, 0, 0), dc, zc);
  CHECK(base == doctest::Approx(std::log(0.5)).epsilon(1e-14));
  CHECK(complete_loglik(point(0, 3.0, 1.2), dc, zc) == doctest::Approx(base).epsilon(1e-15));

  // Independence: dataset log-likelihood is the sum over subjects, in any order.
  const std::vector<double> times = {0.4, 1.1, 2.0, 3.5};
  const std::vector<int> events = {1, 0, 1, 0};
  const std::vector<int> zs = {0, 1, 0, 0};
  Dataset all = testutil::make_dataset(times, events);
  LatentAssignment za;
  za.z = Eigen::Map<const Eigen::VectorXi>(zs.data(), 4);
  const ParameterPoint p = point(-0.3, 0.2, 0.15);
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    Dataset di = testutil::make_dataset({times[i]}, {events[i]});
    LatentAssignment zi;
    zi.z = Eigen::VectorXi::Constant(1, zs[i]);
    sum += complete_loglik(p, di, zi);
  }
  CHECK(complete_loglik(p, all, za) == doctest::Approx(sum).epsilon(1e-12));

  const std::vector<int> perm = {2, 0, 3, 1};
  std::vector<double> pt(4);
  std::vector<int> pe(4), pz(4);
  for (int i = 0; i < 4; ++i) {
    pt[i] = times[perm[i]];
    pe[i] = events[perm[i]];
    pz[i] = zs[perm[i]];
  }
  Dataset shuffled = testutil::make_dataset(pt, pe);
  LatentAssignment zp;
  zp.z = Eigen::Map<const Eigen::VectorXi>(pz.data(), 4);
  CHECK(complete_loglik(p, shuffled, zp) ==
        doctest::Approx(complete_loglik(p, all, za)).epsilon(1e-12));

  // The two blocks partition the total.
  CHECK(incidence_loglik(p.incidence_coef, all, za) +
            latency_loglik(p.latency_coef, p.log_shape, all, za) ==
        doctest::Approx(complete_loglik(p, all, za)).epsilon(1e-12));
}

TEST_CASE("latent assignments flagging uncensored subjects as cured are rejected") {
  Dataset d = testutil::make_dataset({1.0, 2.0}, {1, 0});
  LatentAssignment bad;
  bad.z = Eigen::VectorXi::Zero(2);
  bad.z[0] = 1;
  CHECK_THROWS_AS(bad.validate(d), ContractError);
  CHECK_THROWS_AS(complete_loglik(point(0, 0, 0), d, bad), ContractError);
  LatentAssignment wrong_len;
  wrong_len.z = Eigen::VectorXi::Zero(3);
  CHECK_THROWS_AS(wrong_len.validate(d), ContractError);
}

TEST_CASE("dataset validation rejects non-positive times and bad indicators") {
  Dataset d = testutil::make_dataset({1.0, 2.0}, {1, 0});
  CHECK_NOTHROW(d.validate());
  Dataset bad_time = d;
  bad_time.time[1] = 0.0;
  CHECK_THROWS_AS(bad_time.validate(), ContractError);
  Dataset bad_event = d;
  bad_event.event[0] = 2;
  CHECK_THROWS_AS(bad_event.validate(), ContractError);
  Dataset bad_intercept = d;
  bad_intercept.incidence_design(0, 0) = 0.0;
  CHECK_THROWS_AS(bad_intercept.validate(), ContractError);
}

TEST_CASE("log prior decomposes into per-coefficient Gaussian and shape Gamma terms") {
  PriorSpec prior;  // v = 1000, Gamma(0.01, 0.01)
  // With no coefficients at all, only the transformed Gamma density remains;
  // at alpha = 1 the log-shape Jacobian vanishes.
  Dataset d0 = testutil::empty_dataset();
  (void)d0;
  ParameterPoint no_coef;
  no_coef.incidence_coef = Eigen::VectorXd(0);
  no_coef.latency_coef = Eigen::VectorXd(0);
  no_coef.log_shape = 0.0;
  const double a = prior.shape_a, b = prior.shape_b;
  const double gamma_at_one = a * std::log(b) - std::lgamma(a) - b;
  CHECK(log_prior(no_coef, prior) == doctest::Approx(gamma_at_one).epsilon(1e-12));

  // Each zero coefficient contributes the Gaussian normalizing constant.
  ParameterPoint two_coef = point(0, 0, 0);
  CHECK(log_prior(two_coef, prior) ==
        doctest::Approx(gamma_at_one - std::log(2.0 * M_PI * 1000.0)).epsilon(1e-12));

  // Doubling the variance lowers the density at zero by half a log-2 per
  // coefficient.
  PriorSpec doubled = prior;
  doubled.coef_variance = 2000.0;
  CHECK(log_prior(two_coef, prior) - log_prior(two_coef, doubled) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("analytic gradient and Hessian match finite differences") {
  Dataset d = testutil::make_dataset({0.5, 1.1, 1.9, 2.6, 3.3, 0.8},
                                     {1, 1, 0, 1, 0, 1},
                                     {0.3, -1.2, 0.7, 1.5, -0.4, 0.1});
  LatentAssignment z = testutil::all_susceptible(d);
  z.z[2] = 1;
  PriorSpec prior;
  prior.coef_variance = 4.0;

  const auto flat_value = [&](const Eigen::VectorXd& x) {
    ParameterPoint p;
    p.incidence_coef = x.segment(0, 2);
    p.latency_coef = x.segment(2, 2);
    p.log_shape = x[4];
    return log_posterior(p, d, z, prior);
  };

  Rng rng(19);
  for (int rep = 0; rep < 6; ++rep) {
    Eigen::VectorXd x(5);
    for (int i = 0; i < 5; ++i) x[i] = 0.7 * rng.normal();
    ParameterPoint p;
    p.incidence_coef = x.segment(0, 2);
    p.latency_coef = x.segment(2, 2);
    p.log_shape = x[4];
    const GradHess gh = log_posterior_grad_hess(p, d, z, prior);
    CHECK(gh.value == doctest::Approx(flat_value(x)).epsilon(1e-12));

    const Eigen::VectorXd g_fd = testutil::fd_gradient(flat_value, x);
    CHECK((gh.gradient - g_fd).norm() / std::max(1.0, g_fd.norm()) < 1e-6);

    const Eigen::MatrixXd h_fd = testutil::fd_hessian(flat_value, x);
    CHECK((gh.hessian - h_fd).norm() / h_fd.norm() < 1e-6);
    CHECK((gh.hessian - gh.hessian.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("prior-only gradient vanishes at the coefficient origin") {
  Dataset d = testutil::empty_dataset();
  LatentAssignment z;
  z.z = Eigen::VectorXi(0);
  ParameterPoint p = point(0, 0, 0);
  PriorSpec prior;
  const GradHess gh = log_posterior_grad_hess(p, d, z, prior);
  CHECK(gh.gradient[0] == 0.0);
  CHECK(gh.gradient[1] == 0.0);
  // Gamma(a, a) puts the transformed mode at log-shape 0 as well.
  CHECK(gh.gradient[2] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("both latency families share the hazard form; the log-time view agrees") {
  // Under the accelerated failure time reading, log T = -sigma * linear
  // predictor + sigma * standard Gumbel with sigma = 1/alpha, which gives
  // S(t) = exp(-exp(alpha * log t + linear predictor)).
  Rng rng(23);
  for (int k = 0; k < 10; ++k) {
    const double alpha = std::exp(0.5 * rng.normal());
    const double g = rng.normal();
    const double t = 0.2 + 4.0 * rng.uniform();
    ParameterPoint p = point(0, g, std::log(alpha));
    const double via_hazard = latency_survival(t, p, kOne);
    const double via_logtime = std::exp(-std::exp(alpha * std::log(t) + g));
    CHECK(via_hazard == doctest::Approx(via_logtime).epsilon(1e-12));
  }

  // The family tag changes reporting conventions, not the likelihood.
  Dataset d_ph = testutil::make_dataset({0.9, 1.7, 2.4}, {1, 1, 0});
  Dataset d_aft = d_ph;
  d_aft.family = LatencyFamily::weibull_aft;
  LatentAssignment z = testutil::all_susceptible(d_ph);
  const ParameterPoint p = point(-0.4, 0.3, 0.2);
  CHECK(complete_loglik(p, d_ph, z) == complete_loglik(p, d_aft, z));
}

TEST_CASE("family names round-trip") {
  CHECK(family_name(LatencyFamily::weibull_ph) == "weibull-ph");
  CHECK(family_name(LatencyFamily::weibull_aft) == "weibull-aft");
  CHECK(family_from_name("weibull-ph") == LatencyFamily::weibull_ph);
  CHECK(family_from_name("weibull-aft") == LatencyFamily::weibull_aft);
  CHECK_THROWS_AS(family_from_name("cox"), DataError);
}
