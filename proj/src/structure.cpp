#include "stochfsi/structure.hpp"

#include <Eigen/Eigenvalues>

namespace stochfsi {

StructureState zero_structure(const BeamSpace& space) {
  return {BeamCoeffs::Zero(space.ndof(), 2), BeamCoeffs::Zero(space.ndof(), 2)};
}

ElasticOperator assemble_elastic(std::shared_ptr<const BeamSpace> space, double c_b,
                                 double c_0) {
  if (!(c_b > 0.0))
    throw ConfigurationError("elastic operator: bending coefficient must be > 0 (coercivity)");
  if (c_0 < 0.0) throw ConfigurationError("elastic operator: c_0 must be nonnegative");
  ElasticOperator op;
  op.space = std::move(space);
  op.c_b = c_b;
  op.c_0 = c_0;
  op.mass = op.space->mass();
  op.regularizer = op.space->bending();
  op.stiffness = c_b * op.regularizer + c_0 * op.mass;
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      Eigen::MatrixXd(op.stiffness), Eigen::MatrixXd(op.mass), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ConfigurationError("elastic operator: eigensolve failed");
  op.min_eigenvalue = es.eigenvalues()(0);
  if (!(op.min_eigenvalue > 0.0))
    throw ConfigurationError("elastic operator is not coercive on the clamped space");
  return op;
}

double quad_form(const Eigen::SparseMatrix<double>& a, const BeamCoeffs& x) {
  double s = 0.0;
  for (int c = 0; c < 2; ++c) s += x.col(c).dot(a * x.col(c));
  return s;
}

StructureStepper::StructureStepper(const ElasticOperator& op, double dt, double eps)
    : op_(&op), dt_(dt), eps_(eps) {
  if (!(dt > 0.0)) throw ConfigurationError("structure step: dt must be positive");
  if (eps < 0.0) throw ConfigurationError("structure step: eps must be nonnegative");
  const Eigen::SparseMatrix<double> a =
      op.mass + (dt * dt) * op.stiffness + (eps * dt) * op.regularizer;
  solver_.compute(a);
  if (solver_.info() != Eigen::Success)
    throw std::logic_error("structure step: system is not SPD (assembly bug)");
}

StructureState StructureStepper::step(const StructureState& s) const {
  const BeamCoeffs rhs = op_->mass * s.v - dt_ * (op_->stiffness * s.eta);
  StructureState out;
  out.v = solver_.solve(rhs);
  out.eta = s.eta + dt_ * out.v;
  return out;
}

StructureState structure_substep(const StructureState& s, const ElasticOperator& op, double dt,
                                 double eps) {
  return StructureStepper(op, dt, eps).step(s);
}

std::pair<double, double> structure_energy(const StructureState& s, const ElasticOperator& op) {
  return {0.5 * quad_form(op.mass, s.v), 0.5 * quad_form(op.stiffness, s.eta)};
}

}  // namespace stochfsi
