#ifndef CUREMIX_ERRORS_HPP
#define CUREMIX_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace curemix {

/// Violation of an API contract (dimension mismatch, invalid latent vector, ...).
class ContractError : public std::logic_error {
 public:
  explicit ContractError(const std::string& what) : std::logic_error(what) {}
};

/// Malformed input data or an unusable model/data configuration.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Newton mode finding failed; carries the last iterate for diagnostics.
class OptimizerError : public std::runtime_error {
 public:
  OptimizerError(const std::string& what, std::vector<double> last_iterate)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)) {}
  const std::vector<double>& last_iterate() const { return last_iterate_; }

 private:
  std::vector<double> last_iterate_;
};

/// The negative Hessian at the terminal point is not positive definite.
class CurvatureError : public OptimizerError {
 public:
  CurvatureError(const std::string& what, std::vector<double> last_iterate)
      : OptimizerError(what, std::move(last_iterate)) {}
};

/// A hyper-grid profile fit failed; names the offending grid point.
class GridError : public std::runtime_error {
 public:
  GridError(const std::string& what, int point_index, double log_shape)
      : std::runtime_error(what), point_index_(point_index), log_shape_(log_shape) {}
  int point_index() const { return point_index_; }
  double log_shape() const { return log_shape_; }

 private:
  int point_index_;
  double log_shape_;
};

/// The Gibbs chain could not be kept alive (repeated rejected iterations).
class ChainError : public std::runtime_error {
 public:
  ChainError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace curemix

#endif  // CUREMIX_ERRORS_HPP
