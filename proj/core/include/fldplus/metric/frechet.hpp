#pragma once

#include <cstddef>
#include <vector>

#include "fldplus/features/feature_set.hpp"

namespace fldplus::metric {

struct GaussianMoments {
  std::size_t dim = 0;
  std::vector<double> mean;        // dim
  std::vector<double> covariance;  // dim x dim, row-major

  double cov(std::size_t i, std::size_t j) const { return covariance[i * dim + j]; }
  void validate() const;  // sizes, symmetry (1e-8), finiteness
};

// Sample mean and unbiased covariance; needs at least two rows.
GaussianMoments gaussian_moments(const features::FeatureSet& set);

// |mu_p - mu_q|^2 + tr(S_p + S_q - 2 (S_p S_q)^{1/2}). The square-root trace
// comes from the eigenvalues of S_p^{1/2} S_q S_p^{1/2}; eigenvalues below
// zero by less than 1e-6 * trace are clamped, larger violations are errors.
double frechet_distance(const GaussianMoments& p, const GaussianMoments& q);

}  // namespace fldplus::metric
