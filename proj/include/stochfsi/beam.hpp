#pragma once

#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <vector>

#include "stochfsi/types.hpp"

namespace stochfsi {

/// Clamped cubic Hermite space on a uniform grid of (0, L).
///
/// Interior grid node i = 1..ne-1 carries two dofs: the value (index 2(i-1))
/// and the slope (index 2(i-1)+1). End values and slopes are zero.
class BeamSpace {
public:
  BeamSpace(double length, int elements);

  double length() const { return length_; }
  int elements() const { return ne_; }
  double h() const { return length_ / ne_; }
  int ndof() const { return 2 * (ne_ - 1); }

  /// Global dof of local shape function a (0..3) of element e, or -1 if clamped.
  int dof(int e, int a) const;
  int element_of(double z) const;

  /// Local shape functions (or their derivatives of the given order) at z.
  std::array<double, 4> shape(int e, double z, int order) const;

  Vec2 evaluate(const BeamCoeffs& c, double z, int order = 0) const;
  double evaluate(const Eigen::VectorXd& c, double z, int order = 0) const;

  /// Rows evaluate the `order`-th derivative at each point.
  Eigen::SparseMatrix<double> evaluation_matrix(const std::vector<double>& z, int order) const;

  /// Hermite interpolant from point values and slopes.
  BeamCoeffs interpolate(const std::function<Vec2(double)>& f,
                         const std::function<Vec2(double)>& df) const;

  /// Load vector (int f phi_j dz) with `points_per_element` Gauss points.
  BeamCoeffs load(const std::function<Vec2(double)>& f, int points_per_element = 8) const;

  /// int phi_i phi_j dz
  Eigen::SparseMatrix<double> mass() const;
  /// int phi_i'' phi_j'' dz
  Eigen::SparseMatrix<double> bending() const;

private:
  Eigen::SparseMatrix<double> assemble(int order) const;

  double length_;
  int ne_;
};

}  // namespace stochfsi
