#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace riskfuse {

struct ImportanceOptions {
  int max_centers = 100;
  int folds = 5;
  std::vector<double> ridge_grid{1e-3, 1e-2, 1e-1, 1.0};
  /// Kernel widths as multiples of the median inter-center distance.
  std::vector<double> width_grid{0.25, 0.5, 1.0, 2.0};
  std::uint64_t seed = 20240611;
};

struct ImportanceFit {
  std::vector<double> weights;  // one per training row, mean 1
  double ridge = 0.0;
  double width = 0.0;
  int centers = 0;
};

/// Unconstrained least-squares density-ratio fit (target / train) over a
/// Gaussian-kernel basis centred on target rows. Features are standardised on
/// the pooled sample; constant features are ignored. Negative ratios are
/// clipped to 0 and the weights rescaled to mean 1.
ImportanceFit importance_weights(const Eigen::MatrixXd& train, const Eigen::MatrixXd& target,
                                 const ImportanceOptions& options = {});

}  // namespace riskfuse
