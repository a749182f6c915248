#include "curemix/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace curemix {

double normal_pdf(double x, double mu, double sd) {
  const double z = (x - mu) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * M_PI));
}

double normal_cdf(double x, double mu, double sd) {
  return 0.5 * std::erfc(-(x - mu) / (sd * std::sqrt(2.0)));
}

double Marginal::variance() const {
  const double m = mean();
  return std::max(0.0, second_moment() - m * m);
}

double Marginal::sd() const { return std::sqrt(variance()); }

double Marginal::expect(const std::function<double(double)>& f) const {
  auto [lo, hi] = bracket();
  constexpr int kPanels = 2048;  // even count for Simpson
  const double h = (hi - lo) / kPanels;
  double acc = f(lo) * pdf(lo) + f(hi) * pdf(hi);
  for (int j = 1; j < kPanels; ++j) {
    const double x = lo + j * h;
    acc += (j % 2 == 1 ? 4.0 : 2.0) * f(x) * pdf(x);
  }
  return acc * h / 3.0;
}

double Marginal::quantile(double prob) const {
  if (!(prob > 0.0 && prob < 1.0))
    throw ContractError("quantile: probability must lie strictly in (0, 1)");
  auto [lo, hi] = bracket();
  // Widen until the bracket truly straddles the target; bracket() is meant to
  // cover everything but cheap insurance beats a silent wrong answer.
  double width = hi - lo;
  while (cdf(lo) > prob) { lo -= width; width *= 2.0; }
  width = hi - lo;
  while (cdf(hi) < prob) { hi += width; width *= 2.0; }
  while (hi - lo > 1e-8) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<double> means,
                                 std::vector<double> sds)
    : weights_(std::move(weights)), means_(std::move(means)), sds_(std::move(sds)) {
  if (weights_.empty() || weights_.size() != means_.size() || weights_.size() != sds_.size())
    throw ContractError("GaussianMixture: component vectors empty or of unequal length");
  double total = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!(weights_[k] > 0.0) || !(sds_[k] > 0.0) || !std::isfinite(means_[k]))
      throw ContractError("GaussianMixture: weights and sds must be positive and finite");
    total += weights_[k];
  }
  for (double& w : weights_) w /= total;
}

double GaussianMixture::pdf(double x) const {
  double p = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k)
    p += weights_[k] * normal_pdf(x, means_[k], sds_[k]);
  return p;
}

double GaussianMixture::cdf(double x) const {
  double c = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k)
    c += weights_[k] * normal_cdf(x, means_[k], sds_[k]);
  return c;
}

double GaussianMixture::mean() const {
  double m = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) m += weights_[k] * means_[k];
  return m;
}

double GaussianMixture::second_moment() const {
  double m2 = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k)
    m2 += weights_[k] * (sds_[k] * sds_[k] + means_[k] * means_[k]);
  return m2;
}

std::pair<double, double> GaussianMixture::bracket() const {
  double lo = means_[0], hi = means_[0];
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    lo = std::min(lo, means_[k] - 10.0 * sds_[k]);
    hi = std::max(hi, means_[k] + 10.0 * sds_[k]);
  }
  return {lo, hi};
}

GridDensity::GridDensity(std::vector<double> points, std::vector<double> densities)
    : points_(std::move(points)), densities_(std::move(densities)) {
  if (points_.size() < 2 || points_.size() != densities_.size())
    throw ContractError("GridDensity: need at least two grid points with matching densities");
  for (std::size_t k = 0; k < points_.size(); ++k) {
    if (!std::isfinite(points_[k]) || !(densities_[k] >= 0.0) || !std::isfinite(densities_[k]))
      throw ContractError("GridDensity: grid points must be finite, densities non-negative");
    if (k > 0 && !(points_[k] > points_[k - 1]))
      throw ContractError("GridDensity: grid points must be strictly increasing");
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < points_.size(); ++k)
    total += 0.5 * (densities_[k] + densities_[k + 1]) * (points_[k + 1] - points_[k]);
  if (!(total > 0.0))
    throw ContractError("GridDensity: density integrates to zero over the grid");
  for (double& d : densities_) d /= total;
  cum_.assign(points_.size(), 0.0);
  for (std::size_t k = 0; k + 1 < points_.size(); ++k)
    cum_[k + 1] = cum_[k] + 0.5 * (densities_[k] + densities_[k + 1]) * (points_[k + 1] - points_[k]);
}

double GridDensity::pdf(double x) const {
  if (x <= points_.front() || x >= points_.back()) {
    if (x == points_.front()) return densities_.front();
    if (x == points_.back()) return densities_.back();
    return 0.0;
  }
  const auto it = std::upper_bound(points_.begin(), points_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - points_.begin()) - 1;
  const double w = (x - points_[k]) / (points_[k + 1] - points_[k]);
  return (1.0 - w) * densities_[k] + w * densities_[k + 1];
}

double GridDensity::cdf(double x) const {
  if (x <= points_.front()) return 0.0;
  if (x >= points_.back()) return 1.0;
  const auto it = std::upper_bound(points_.begin(), points_.end(), x);
  const std::size_t k = static_cast<std::size_t>(it - points_.begin()) - 1;
  const double dx = x - points_[k];
  const double slope = (densities_[k + 1] - densities_[k]) / (points_[k + 1] - points_[k]);
  return cum_[k] + densities_[k] * dx + 0.5 * slope * dx * dx;
}

double GridDensity::cell_mass(int k) const {
  return 0.5 * (densities_[k] + densities_[k + 1]) * (points_[k + 1] - points_[k]);
}

double GridDensity::mean() const {
  return expect([](double x) { return x; });
}

double GridDensity::second_moment() const {
  return expect([](double x) { return x * x; });
}

double GridDensity::expect(const std::function<double(double)>& f) const {
  // Composite Simpson with 8 subintervals per grid cell; the density is
  // linear within a cell so the refinement only needs to resolve f.
  constexpr int kSub = 8;
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < points_.size(); ++k) {
    const double a = points_[k], b = points_[k + 1];
    const double h = (b - a) / kSub;
    double acc = f(a) * pdf(a) + f(b) * densities_[k + 1];
    for (int j = 1; j < kSub; ++j) {
      const double x = a + j * h;
      acc += (j % 2 == 1 ? 4.0 : 2.0) * f(x) * pdf(x);
    }
    total += acc * h / 3.0;
  }
  return total;
}

std::pair<double, double> GridDensity::bracket() const {
  return {points_.front(), points_.back()};
}

AveragedMarginal::AveragedMarginal(std::vector<std::shared_ptr<const Marginal>> parts)
    : parts_(std::move(parts)) {
  if (parts_.empty()) throw ContractError("AveragedMarginal: no marginals to average");
  for (const auto& p : parts_)
    if (!p) throw ContractError("AveragedMarginal: null marginal");
}

double AveragedMarginal::pdf(double x) const {
  double v = 0.0;
  for (const auto& p : parts_) v += p->pdf(x);
  return v / parts_.size();
}

double AveragedMarginal::cdf(double x) const {
  double v = 0.0;
  for (const auto& p : parts_) v += p->cdf(x);
  return v / parts_.size();
}

double AveragedMarginal::mean() const {
  double v = 0.0;
  for (const auto& p : parts_) v += p->mean();
  return v / parts_.size();
}

double AveragedMarginal::second_moment() const {
  double v = 0.0;
  for (const auto& p : parts_) v += p->second_moment();
  return v / parts_.size();
}

std::pair<double, double> AveragedMarginal::bracket() const {
  auto [lo, hi] = parts_.front()->bracket();
  for (const auto& p : parts_) {
    auto [l, h] = p->bracket();
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  return {lo, hi};
}

}  // namespace curemix
