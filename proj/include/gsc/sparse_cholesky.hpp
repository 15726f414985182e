#pragma once

#include <memory>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace gsc {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// Supernodal sparse Cholesky factorization P A P^T = L L^T backed by
/// CHOLMOD. Only the lower triangle of the input is read. Solves reuse one
/// CHOLMOD workspace, so a single instance must not be shared across threads.
class SparseCholesky {
 public:
  /// Throws NumericError if the matrix is not positive definite.
  explicit SparseCholesky(const SparseMatrix& matrix);
  ~SparseCholesky();
  SparseCholesky(SparseCholesky&&) noexcept;
  SparseCholesky& operator=(SparseCholesky&&) noexcept;
  SparseCholesky(const SparseCholesky&) = delete;
  SparseCholesky& operator=(const SparseCholesky&) = delete;

  Eigen::Index size() const;

  /// A^{-1} b
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  /// P^T L^{-T} z. For z with identity covariance the result has
  /// covariance A^{-1}.
  Eigen::VectorXd correlate(const Eigen::VectorXd& z) const;
  /// Column-wise correlate().
  Eigen::MatrixXd correlate(const Eigen::MatrixXd& z) const;

  /// Number of nonzeros in the factor.
  double factor_nonzeros() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace gsc
