#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace stochfsi {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Nodal vector field on the reference mesh: one row per node, columns (z, r).
using NodalField = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Coefficients of a 2-vector function in the beam basis: one row per dof,
/// columns (z, r).
using BeamCoeffs = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Invalid input data or a configuration that cannot be solved.
class ConfigurationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A map whose gradient is not invertible somewhere on the mesh.
class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Local point inside a mesh cell; xi, zeta in [0,1].
struct CellPoint {
  int cell = 0;
  double xi = 0.5;
  double zeta = 0.5;
};

/// Value and reference gradient of a vector field at a point.
/// grad(i, j) = d u_i / d x_j with x = (z, r).
struct FieldSample {
  Vec2 value = Vec2::Zero();
  Mat2 grad = Mat2::Zero();
};

}  // namespace stochfsi
