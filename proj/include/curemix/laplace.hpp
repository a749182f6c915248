#ifndef CUREMIX_LAPLACE_HPP
#define CUREMIX_LAPLACE_HPP

#include <functional>
#include <memory>
#include <vector>

#include "curemix/marginal.hpp"
#include "curemix/model.hpp"

namespace curemix {

struct NewtonOptions {
  double gradient_tol = 1e-8;  // max-norm of the gradient at termination
  int max_iterations = 100;
};

/// Joint posterior mode over (beta1, beta2, log alpha) for a fixed latent
/// assignment, with the exact negative Hessian there.
struct ModeFit {
  ParameterPoint mode;
  Eigen::MatrixXd neg_hessian;
  double log_posterior = 0.0;
  int iterations = 0;
};

struct LaplaceOptions {
  NewtonOptions newton;
  int grid_size = 15;         // odd, >= 3
  double grid_span_sd = 4.0;  // half-width of the log-shape grid, in marginal sds
};

/// One quadrature point of the log-shape grid: the profile mode of the
/// coefficient block at this log-shape and its Gaussian curvature.
struct HyperGridPoint {
  double log_shape = 0.0;
  Eigen::VectorXd coef_mode;   // [beta1, beta2] maximizing the posterior at log_shape
  Eigen::MatrixXd coef_cov;    // inverse of the coefficient-block negative Hessian
  double log_joint = 0.0;      // log posterior at (coef_mode, log_shape)
  double log_laplace = 0.0;    // log_joint + 0.5 log det(2 pi coef_cov)
  double log_step = 0.0;       // log of this point's trapezoid step
  double log_weight = 0.0;     // normalized: logsumexp over the grid is 0
};

/// Laplace approximation of the posterior conditional on one latent
/// assignment. Immutable once built; safe to share across threads.
struct ConditionalFit {
  ModeFit joint;
  std::vector<HyperGridPoint> grid;  // strictly increasing in log_shape
  double log_marginal = 0.0;         // estimate of log integral of the joint density
  int p_incidence = 0;
  int p_latency = 0;

  /// Mixture-of-Gaussians marginal of coefficient flat_index in [beta1, beta2].
  std::shared_ptr<const Marginal> coef_marginal(int flat_index) const;

  /// Grid-interpolated marginal of alpha (log-shape grid mapped through exp).
  std::shared_ptr<const Marginal> shape_marginal() const;

  /// Grid-interpolated marginal of log alpha.
  std::shared_ptr<const Marginal> log_shape_marginal() const;
};

/// Newton ascent with backtracking line search; ridge-shifts the Hessian when
/// it is not negative definite away from the optimum. Throws OptimizerError on
/// non-convergence and CurvatureError when the terminal curvature is not
/// positive definite (as a negative Hessian).
ModeFit find_mode(const Dataset& d, const LatentAssignment& z, const PriorSpec& prior,
                  const ParameterPoint* init = nullptr, const NewtonOptions& options = {});

/// Full conditional fit: joint mode, log-shape grid with profile fits, grid
/// weights, and the conditional log marginal likelihood.
ConditionalFit fit_conditional(const Dataset& d, const LatentAssignment& z,
                               const PriorSpec& prior, const LaplaceOptions& options = {},
                               const ParameterPoint* init = nullptr);

namespace detail {

struct NewtonResult {
  Eigen::VectorXd x;
  GradHess at_x;
  int iterations = 0;
};

/// Maximizes a twice-differentiable objective supplied as a callback.
/// Shared by the joint mode search and the per-grid-point profile fits.
NewtonResult newton_maximize(const std::function<GradHess(const Eigen::VectorXd&)>& objective,
                             Eigen::VectorXd start, const NewtonOptions& options);

}  // namespace detail

}  // namespace curemix

#endif  // CUREMIX_LAPLACE_HPP
