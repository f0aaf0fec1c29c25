#pragma once

#include <Eigen/Dense>
#include <vector>

#include "stochfsi/types.hpp"

namespace stochfsi {

/// Eigenpairs of the Dirichlet Laplacian on (0, L), discretized with linear
/// elements on a uniform grid of `intervals` cells (K phi = gamma M phi,
/// M-orthonormal). Functions are passed as samples at the interior grid
/// nodes z_i = i L / intervals, i = 1..intervals-1; the end values are zero.
///
/// Weighted norms (sum_k (1 + gamma_k)^s |f_k|^2)^{1/2} stand in for H^s
/// (s > 0) and dual H^{-s} norms on the interface.
class InterfaceSpectrum {
public:
  InterfaceSpectrum(double length, int intervals);

  int intervals() const { return intervals_; }
  double length() const { return length_; }
  const Eigen::VectorXd& eigenvalues() const { return gamma_; }
  /// Columns are the M-orthonormal eigenvectors at interior nodes.
  const Eigen::MatrixXd& eigenvectors() const { return phi_; }

  /// Modal coefficients f_k = phi_k^T M f of interior samples.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& interior) const;

  double weighted_norm(const Eigen::VectorXd& interior, double s) const;
  /// Sum over both vector components. `samples` holds all intervals+1 nodes.
  double weighted_norm(const std::vector<Vec2>& samples, double s) const;

private:
  double length_;
  int intervals_;
  Eigen::MatrixXd mass_;
  Eigen::VectorXd gamma_;
  Eigen::MatrixXd phi_;
};

}  // namespace stochfsi
