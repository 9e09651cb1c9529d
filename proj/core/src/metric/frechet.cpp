#include "fldplus/metric/frechet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "fldplus/error.hpp"

namespace fldplus::metric {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Eigen::Map<const MatrixXd> as_matrix(const GaussianMoments& m) {
  // row-major data read as column-major is the transpose; symmetric anyway
  return {m.covariance.data(), static_cast<Eigen::Index>(m.dim), static_cast<Eigen::Index>(m.dim)};
}

double psd_tolerance(const MatrixXd& s) {
  return 1e-6 * std::max(std::abs(s.trace()), 1.0);
}

void require_psd(const VectorXd& eigenvalues, const MatrixXd& s, const char* which) {
  const double lo = eigenvalues.minCoeff();
  if (lo < -psd_tolerance(s)) {
    fail(ErrorCode::kInvalidArgument, std::string(which) +
                                          " covariance is not positive semidefinite (eigenvalue " +
                                          std::to_string(lo) + ")");
  }
}

}  // namespace

void GaussianMoments::validate() const {
  if (dim == 0) fail(ErrorCode::kInvalidArgument, "moments have dimension 0");
  if (mean.size() != dim || covariance.size() != dim * dim) {
    fail(ErrorCode::kDimensionMismatch, "moment arrays do not match dimension " + std::to_string(dim));
  }
  double scale = 1.0;
  for (double v : covariance) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "covariance has non-finite entries");
    scale = std::max(scale, std::abs(v));
  }
  for (double v : mean) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "mean has non-finite entries");
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j) {
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-8 * scale) {
        fail(ErrorCode::kInvalidArgument, "covariance is not symmetric");
      }
    }
  }
}

GaussianMoments gaussian_moments(const features::FeatureSet& set) {
  const std::size_t n = set.count();
  if (n < 2) fail(ErrorCode::kInsufficientData, "moments need at least two samples");
  const auto d = static_cast<Eigen::Index>(set.dim);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      set.values.data(), static_cast<Eigen::Index>(n), d);
  const VectorXd mu = x.colwise().mean();
  const MatrixXd centered = x.rowwise() - mu.transpose();
  MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  cov = 0.5 * (cov + cov.transpose());

  GaussianMoments m;
  m.dim = set.dim;
  m.mean.assign(mu.data(), mu.data() + d);
  m.covariance.resize(set.dim * set.dim);
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      m.covariance.data(), d, d) = cov;
  return m;
}

double frechet_distance(const GaussianMoments& p, const GaussianMoments& q) {
  p.validate();
  q.validate();
  if (p.dim != q.dim) {
    fail(ErrorCode::kDimensionMismatch, "Frechet distance between dimensions " +
                                            std::to_string(p.dim) + " and " + std::to_string(q.dim));
  }
  const auto d = static_cast<Eigen::Index>(p.dim);
  const MatrixXd sp = as_matrix(p);
  const MatrixXd sq = as_matrix(q);
  const VectorXd dmu = Eigen::Map<const VectorXd>(p.mean.data(), d) -
                       Eigen::Map<const VectorXd>(q.mean.data(), d);

  Eigen::SelfAdjointEigenSolver<MatrixXd> ep(sp);
  if (ep.info() != Eigen::Success) fail(ErrorCode::kNonFinite, "eigendecomposition failed");
  require_psd(ep.eigenvalues(), sp, "first");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eq(sq, Eigen::EigenvaluesOnly);
  require_psd(eq.eigenvalues(), sq, "second");

  const VectorXd root = ep.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const MatrixXd sp_half = ep.eigenvectors() * root.asDiagonal() * ep.eigenvectors().transpose();
  MatrixXd inner = sp_half * sq * sp_half;
  inner = 0.5 * (inner + inner.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> ei(inner, Eigen::EigenvaluesOnly);
  if (ei.info() != Eigen::Success) fail(ErrorCode::kNonFinite, "eigendecomposition failed");
  const double tr_sqrt = ei.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double fd = dmu.squaredNorm() + sp.trace() + sq.trace() - 2.0 * tr_sqrt;
  return std::max(fd, 0.0);
}

}  // namespace fldplus::metric
