#include "curemix/laplace.hpp"

#include <cmath>

namespace curemix {

namespace detail {

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

NewtonResult newton_maximize(const std::function<GradHess(const Eigen::VectorXd&)>& objective,
                             Eigen::VectorXd start, const NewtonOptions& options) {
  const int dim = static_cast<int>(start.size());
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd x = std::move(start);
  GradHess cur = objective(x);
  if (!std::isfinite(cur.value))
    throw OptimizerError("objective is not finite at the starting point", to_std(x));

  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    if (cur.gradient.lpNorm<Eigen::Infinity>() < options.gradient_tol) {
      Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(-cur.hessian));
      if (llt.info() != Eigen::Success)
        throw CurvatureError("negative Hessian is not positive definite at the optimum",
                             to_std(x));
      return {x, cur, iter};
    }
    if (iter == options.max_iterations) break;

    // Newton direction from the (ridge-repaired, if needed) negative Hessian.
    Eigen::MatrixXd neg_hess = -cur.hessian;
    Eigen::LLT<Eigen::MatrixXd> llt(neg_hess);
    double ridge = 0.0;
    while (llt.info() != Eigen::Success) {
      const double scale = 1.0 + neg_hess.diagonal().cwiseAbs().maxCoeff();
      ridge = ridge == 0.0 ? 1e-8 * scale : ridge * 10.0;
      if (ridge > 1e12 * scale)
        throw OptimizerError("could not repair indefinite curvature", to_std(x));
      llt.compute(neg_hess + ridge * identity);
    }
    const Eigen::VectorXd step = llt.solve(cur.gradient);
    const double slope = cur.gradient.dot(step);  // positive: ascent direction

    // Backtracking Armijo line search. The acceptance test carries a relative
    // roundoff slack: near the optimum the true improvement of the final
    // Newton step falls below the floating-point resolution of the objective,
    // and a strict comparison would reject it on evaluation noise.
    const double value_slack = 1e-12 * (1.0 + std::abs(cur.value));
    double t = 1.0;
    bool moved = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      const Eigen::VectorXd candidate = x + t * step;
      GradHess next = objective(candidate);
      if (std::isfinite(next.value) &&
          next.value >= cur.value + 1e-4 * t * slope - value_slack) {
        x = candidate;
        cur = std::move(next);
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved)
      throw OptimizerError("line search failed to improve the objective", to_std(x));
  }
  throw OptimizerError("no convergence within the iteration budget", to_std(x));
}

}  // namespace detail

ModeFit find_mode(const Dataset& d, const LatentAssignment& z, const PriorSpec& prior,
                  const ParameterPoint* init, const NewtonOptions& options) {
  z.validate(d);
  prior.validate();
  const int p1 = d.p_incidence();
  const int p2 = d.p_latency();
  Eigen::VectorXd start = init ? init->flatten() : ParameterPoint::zeros(p1, p2).flatten();
  if (start.size() != p1 + p2 + 1)
    throw ContractError("find_mode: starting point does not match the design dimensions");

  const auto objective = [&](const Eigen::VectorXd& v) {
    return log_posterior_grad_hess(ParameterPoint::from_flat(v, p1, p2), d, z, prior);
  };
  auto result = detail::newton_maximize(objective, std::move(start), options);

  ModeFit fit;
  fit.mode = ParameterPoint::from_flat(result.x, p1, p2);
  fit.neg_hessian = -result.at_x.hessian;
  fit.log_posterior = result.at_x.value;
  fit.iterations = result.iterations;
  return fit;
}

namespace {

/// Profile objective over the coefficient block at a fixed log shape.
GradHess coef_block_objective(const Eigen::VectorXd& coef, double log_shape,
                              const Dataset& d, const LatentAssignment& z,
                              const PriorSpec& prior) {
  const int p1 = d.p_incidence();
  const int p2 = d.p_latency();
  ParameterPoint p;
  p.incidence_coef = coef.head(p1);
  p.latency_coef = coef.tail(p2);
  p.log_shape = log_shape;
  GradHess full = log_posterior_grad_hess(p, d, z, prior);
  GradHess block;
  block.value = full.value;
  block.gradient = full.gradient.head(p1 + p2);
  block.hessian = full.hessian.topLeftCorner(p1 + p2, p1 + p2);
  return block;
}

}  // namespace

ConditionalFit fit_conditional(const Dataset& d, const LatentAssignment& z,
                               const PriorSpec& prior, const LaplaceOptions& options,
                               const ParameterPoint* init) {
  const int M = options.grid_size;
  if (M < 3 || M % 2 == 0)
    throw ContractError("fit_conditional: grid size must be odd and at least 3");
  if (!(options.grid_span_sd > 0.0))
    throw ContractError("fit_conditional: grid span must be positive");

  ConditionalFit fit;
  fit.p_incidence = d.p_incidence();
  fit.p_latency = d.p_latency();
  const int nc = fit.p_incidence + fit.p_latency;
  fit.joint = find_mode(d, z, prior, init, options.newton);

  // Marginal sd of the log shape at the joint mode sets the grid spacing.
  const Eigen::MatrixXd joint_cov =
      fit.joint.neg_hessian.llt().solve(Eigen::MatrixXd::Identity(nc + 1, nc + 1));
  const double shape_sd = std::max(std::sqrt(std::max(joint_cov(nc, nc), 0.0)), 1e-6);
  const double half_width = options.grid_span_sd * shape_sd;
  const double step = 2.0 * half_width / (M - 1);

  fit.grid.resize(M);
  const int center = M / 2;
  const auto fit_point = [&](int m, const Eigen::VectorXd& warm_start) {
    HyperGridPoint& point = fit.grid[m];
    point.log_shape = fit.joint.mode.log_shape + (m - center) * step;
    const auto objective = [&](const Eigen::VectorXd& coef) {
      return coef_block_objective(coef, point.log_shape, d, z, prior);
    };
    detail::NewtonResult profile;
    try {
      profile = detail::newton_maximize(objective, warm_start, options.newton);
    } catch (const OptimizerError& err) {
      throw GridError(std::string("profile fit failed at grid point ") + std::to_string(m) +
                          ": " + err.what(),
                      m, point.log_shape);
    }
    point.coef_mode = profile.x;
    point.log_joint = profile.at_x.value;
    Eigen::LLT<Eigen::MatrixXd> llt(Eigen::MatrixXd(-profile.at_x.hessian));
    if (llt.info() != Eigen::Success)
      throw GridError("indefinite coefficient curvature at grid point " + std::to_string(m),
                      m, point.log_shape);
    point.coef_cov = llt.solve(Eigen::MatrixXd::Identity(nc, nc));
    const double log_det_neg_hess =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    point.log_laplace =
        point.log_joint + 0.5 * (nc * std::log(2.0 * M_PI) - log_det_neg_hess);
    point.log_step = std::log(step) + (m == 0 || m == M - 1 ? std::log(0.5) : 0.0);
  };

  // Warm-start outward from the center so each profile fit starts next door.
  Eigen::VectorXd mode_coef(nc);
  mode_coef << fit.joint.mode.incidence_coef, fit.joint.mode.latency_coef;
  fit_point(center, mode_coef);
  for (int m = center + 1; m < M; ++m) fit_point(m, fit.grid[m - 1].coef_mode);
  for (int m = center - 1; m >= 0; --m) fit_point(m, fit.grid[m + 1].coef_mode);

  std::vector<double> log_masses(M);
  for (int m = 0; m < M; ++m) log_masses[m] = fit.grid[m].log_laplace + fit.grid[m].log_step;
  fit.log_marginal = log_sum_exp(log_masses);
  for (int m = 0; m < M; ++m) fit.grid[m].log_weight = log_masses[m] - fit.log_marginal;
  return fit;
}

std::shared_ptr<const Marginal> ConditionalFit::coef_marginal(int flat_index) const {
  if (flat_index < 0 || flat_index >= p_incidence + p_latency)
    throw ContractError("coef_marginal: coefficient index out of range");
  std::vector<double> weights, means, sds;
  weights.reserve(grid.size());
  for (const auto& point : grid) {
    weights.push_back(std::exp(point.log_weight));
    means.push_back(point.coef_mode[flat_index]);
    sds.push_back(std::sqrt(point.coef_cov(flat_index, flat_index)));
  }
  return std::make_shared<GaussianMixture>(std::move(weights), std::move(means),
                                           std::move(sds));
}

std::shared_ptr<const Marginal> ConditionalFit::log_shape_marginal() const {
  std::vector<double> points, densities;
  points.reserve(grid.size());
  for (const auto& point : grid) {
    points.push_back(point.log_shape);
    densities.push_back(std::exp(point.log_weight - point.log_step));
  }
  return std::make_shared<GridDensity>(std::move(points), std::move(densities));
}

std::shared_ptr<const Marginal> ConditionalFit::shape_marginal() const {
  std::vector<double> points, densities;
  points.reserve(grid.size());
  for (const auto& point : grid) {
    const double alpha = std::exp(point.log_shape);
    points.push_back(alpha);
    // change of variables: density in alpha carries a 1/alpha Jacobian
    densities.push_back(std::exp(point.log_weight - point.log_step) / alpha);
  }
  return std::make_shared<GridDensity>(std::move(points), std::move(densities));
}

}  // namespace curemix
