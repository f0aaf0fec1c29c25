#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <utility>

#include "stochfsi/beam.hpp"
#include "stochfsi/types.hpp"

namespace stochfsi {

struct StructureState {
  BeamCoeffs eta;
  BeamCoeffs v;
};

StructureState zero_structure(const BeamSpace& space);

/// Matrices of the elastic operator L_e = c_b d^4/dz^4 + c_0 on the clamped
/// Hermite space. The energy norm |eta|^2_{H^2_0} is eta^T K eta.
struct ElasticOperator {
  std::shared_ptr<const BeamSpace> space;
  double c_b = 1.0;
  double c_0 = 0.0;
  Eigen::SparseMatrix<double> mass;          ///< M
  Eigen::SparseMatrix<double> stiffness;     ///< K = c_b B + c_0 M
  Eigen::SparseMatrix<double> regularizer;   ///< R = B, (d_zz, d_zz)
  double min_eigenvalue = 0.0;               ///< smallest eigenvalue of K phi = lambda M phi
};

/// Throws ConfigurationError if c_b <= 0 or c_0 < 0.
ElasticOperator assemble_elastic(std::shared_ptr<const BeamSpace> space, double c_b = 1.0,
                                 double c_0 = 0.0);

/// sum over both columns of x^T A x
double quad_form(const Eigen::SparseMatrix<double>& a, const BeamCoeffs& x);

/// Factorizes M + dt^2 K + eps dt R once for repeated half-steps.
class StructureStepper {
public:
  StructureStepper(const ElasticOperator& op, double dt, double eps);
  StructureState step(const StructureState& s) const;
  double dt() const { return dt_; }
  double eps() const { return eps_; }

private:
  const ElasticOperator* op_;
  double dt_, eps_;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver_;
};

StructureState structure_substep(const StructureState& s, const ElasticOperator& op, double dt,
                                 double eps);

/// (kinetic, elastic) = (v^T M v / 2, eta^T K eta / 2)
std::pair<double, double> structure_energy(const StructureState& s, const ElasticOperator& op);

}  // namespace stochfsi
