#ifndef CUREMIX_MARGINAL_HPP
#define CUREMIX_MARGINAL_HPP

#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "curemix/errors.hpp"

namespace curemix {

// A univariate posterior marginal. Concrete densities implement pdf/cdf and
// the moment accessors; quantiles are always obtained by bisecting the cdf,
// which keeps them consistent with whatever cdf the subclass provides.
class Marginal {
 public:
  virtual ~Marginal() = default;

  virtual double pdf(double x) const = 0;
  virtual double cdf(double x) const = 0;
  virtual double mean() const = 0;
  virtual double second_moment() const = 0;

  // [lo, hi] guaranteed to contain all requested quantiles.
  virtual std::pair<double, double> bracket() const = 0;

  double sd() const;
  double variance() const;

  // Monotone bisection on the cdf, terminating when the bracket width falls
  // below 1e-8. Requires 0 < prob < 1.
  double quantile(double prob) const;

  // E[f(X)] by composite Simpson over the bracket. Subclasses with a natural
  // grid override this with a cell-aware rule.
  virtual double expect(const std::function<double(double)>& f) const;
};

// Weighted sum of Gaussian densities. Weights must be positive and are
// normalized on construction; a single component is a plain Gaussian.
class GaussianMixture final : public Marginal {
 public:
  GaussianMixture(std::vector<double> weights, std::vector<double> means,
                  std::vector<double> sds);

  double pdf(double x) const override;
  double cdf(double x) const override;
  double mean() const override;
  double second_moment() const override;
  std::pair<double, double> bracket() const override;

  int components() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& sds() const { return sds_; }

 private:
  std::vector<double> weights_, means_, sds_;
};

// Piecewise-linear density on a strictly increasing grid, normalized by
// trapezoid integration on construction. Density is zero outside the grid.
class GridDensity final : public Marginal {
 public:
  GridDensity(std::vector<double> points, std::vector<double> densities);

  double pdf(double x) const override;
  double cdf(double x) const override;
  double mean() const override;
  double second_moment() const override;
  std::pair<double, double> bracket() const override;

  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& densities() const { return densities_; }

  // Cell-aware override: composite Simpson inside each grid cell, refined so
  // the transform is resolved even where the grid is coarse.
  double expect(const std::function<double(double)>& f) const override;

 private:
  double cell_mass(int k) const;

  std::vector<double> points_, densities_;
  std::vector<double> cum_;  // cumulative mass up to each grid point
};

// Equal-weight average of a set of marginals, used when pooling the
// conditional fits produced across Gibbs sweeps.
class AveragedMarginal final : public Marginal {
 public:
  explicit AveragedMarginal(std::vector<std::shared_ptr<const Marginal>> parts);

  double pdf(double x) const override;
  double cdf(double x) const override;
  double mean() const override;
  double second_moment() const override;
  std::pair<double, double> bracket() const override;

 private:
  std::vector<std::shared_ptr<const Marginal>> parts_;
};

// Standard normal cdf/pdf helpers shared by the mixture and the tests.
double normal_pdf(double x, double mu, double sd);
double normal_cdf(double x, double mu, double sd);

}  // namespace curemix

#endif  // CUREMIX_MARGINAL_HPP
