#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <stdexcept>
#include <string>

#include "stochfsi/ale.hpp"
#include "stochfsi/mesh.hpp"
#include "stochfsi/noise.hpp"
#include "stochfsi/structure.hpp"
#include "stochfsi/types.hpp"

namespace stochfsi {

enum class SlipProjection { Full, Tangential };
/// Quadrature of the divergence penalty: one point per cell (no locking) or the 2x2 rule.
enum class DivQuadrature { Centroid, Gauss };

/// Unknown layout of the coupled fluid half-step: free fluid velocity dofs
/// (u_r is fixed to zero on inlet, outlet and bottom), then the two
/// components of the structure velocity in the beam basis.
class FluidSpace {
public:
  FluidSpace(MeshPtr mesh, std::shared_ptr<const InterfaceQuadrature> iface,
             std::shared_ptr<const ElasticOperator> op);

  const ReferenceMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const InterfaceQuadrature& iface() const { return *iface_; }
  const ElasticOperator& elastic() const { return *op_; }
  const BeamSpace& beam() const { return *op_->space; }

  int num_fluid() const { return num_fluid_; }
  int num_beam() const { return beam().ndof(); }
  int size() const { return num_fluid_ + 2 * num_beam(); }

  /// Unknown index of velocity component c at node n, -1 if constrained.
  int fluid_dof(int node, int comp) const { return fluid_dof_[2 * node + comp]; }
  int beam_dof(int j, int comp) const { return num_fluid_ + comp * num_beam() + j; }
  bool constrained(int node, int comp) const { return fluid_dof(node, comp) < 0; }

  Eigen::VectorXd pack(const NodalField& u, const BeamCoeffs& v) const;
  void unpack(const Eigen::VectorXd& x, NodalField& u, BeamCoeffs& v) const;
  /// Copy of u with constrained components set to zero.
  NodalField constrain(NodalField u) const;

  /// Beam shape values at the interface quadrature points.
  const Eigen::SparseMatrix<double>& beam_trace() const { return beam_trace_; }

private:
  MeshPtr mesh_;
  std::shared_ptr<const InterfaceQuadrature> iface_;
  std::shared_ptr<const ElasticOperator> op_;
  std::vector<int> fluid_dof_;
  int num_fluid_ = 0;
  Eigen::SparseMatrix<double> beam_trace_;
};

struct FluidStepInputs {
  NodalField u_prev;   ///< u^{n+1/2} = u^n
  BeamCoeffs v_half;   ///< v^{n+1/2}
  std::shared_ptr<const AleMap> map_n;    ///< artificial map at t^n
  std::shared_ptr<const AleMap> map_np1;  ///< artificial map at t^{n+1}
  NodalField w;        ///< ALE velocity
  ForcingPair force;   ///< loads of G(u^n, eta^n_*) dW
  double p_in = 0.0, p_out = 0.0;  ///< step-averaged boundary pressures
  double dt = 0.0, eps = 0.0, alpha = 1.0, nu = 1.0;
  SlipProjection slip = SlipProjection::Full;
  DivQuadrature div_rule = DivQuadrature::Centroid;
};

/// Validates the invariants of FluidStepInputs; throws ConfigurationError or GeometryError.
void validate(const FluidSpace& space, const FluidStepInputs& in);

/// Pieces of the linearized system. The two penalty matrices carry the dt
/// factor but not 1/eps.
struct FluidOperatorParts {
  Eigen::SparseMatrix<double> mass;            ///< fluid 1/2(J^n + J^{n+1}) mass + structure M
  Eigen::SparseMatrix<double> viscous;
  Eigen::SparseMatrix<double> slip;
  Eigen::SparseMatrix<double> div_penalty;
  Eigen::SparseMatrix<double> normal_penalty;
  Eigen::VectorXd rhs_mass;       ///< J^n u_prev and M v_half pairings
  Eigen::VectorXd rhs_pressure;
  Eigen::VectorXd rhs_noise;
  double eps = 1.0;

  Eigen::SparseMatrix<double> static_matrix() const;
  Eigen::VectorXd rhs() const { return rhs_mass + rhs_pressure + rhs_noise; }
};

FluidOperatorParts assemble_fluid_parts(const FluidSpace& space, const FluidStepInputs& in);

/// dt b^{eta^n}(u_adv - w; ., .) as a matrix (row = test, column = trial).
Eigen::SparseMatrix<double> assemble_advection(const FluidSpace& space, const FluidStepInputs& in,
                                               const NodalField& u_adv);

struct FluidSystem {
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
};

FluidSystem assemble_fluid_system(const FluidSpace& space, const FluidStepInputs& in,
                                  const NodalField& u_adv);

/// 1/2 int J ((a . grad^eta) u . q - (a . grad^eta) q . u), a = u_adv - w.
double trilinear_b(const AleMap& map, const NodalField& u_adv, const NodalField& w,
                   const NodalField& u, const NodalField& q);

struct PicardReport {
  int iterations = 0;
  double residual = 0.0;
};

struct FluidStepResult {
  NodalField u;
  BeamCoeffs v;
  PicardReport report;
};

class FluidStepFailure : public std::runtime_error {
public:
  FluidStepFailure(const std::string& what, FluidStepResult last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  FluidStepResult last_iterate;
};

FluidStepResult fluid_substep(const FluidSpace& space, const FluidStepInputs& in,
                              double picard_tol = 1e-10, int max_picard = 50);

/// Terms of the energy identity obtained by testing the fluid half-step with
/// its own solution; all evaluated by quadrature.
struct FluidBudget {
  double kinetic_new = 0.0;   ///< 1/2 int J^{n+1}|u^{n+1}|^2 + 1/2 |v^{n+1}|^2
  double kinetic_half = 0.0;  ///< 1/2 int J^n |u^n|^2 + 1/2 |v^{n+1/2}|^2
  double c2 = 0.0;            ///< 1/4 int J^n |u^{n+1}-u^n|^2 + 1/4 |v^{n+1}-v^{n+1/2}|^2
  double d2_viscous = 0.0;
  double d2_slip = 0.0;
  double d2_div = 0.0;
  double d2_normal = 0.0;
  double pressure_work = 0.0;
  double stochastic_new = 0.0;  ///< (G dW, (u^{n+1}, v^{n+1}))

  double d2() const { return d2_viscous + d2_slip + d2_div + d2_normal; }
  double lhs() const { return kinetic_new - kinetic_half + d2() + 2.0 * c2; }
  double rhs() const { return pressure_work + stochastic_new; }
  double residual() const;
};

FluidBudget fluid_budget(const FluidSpace& space, const FluidStepInputs& in,
                         const NodalField& u_new, const BeamCoeffs& v_new);

double fluid_energy_identity_residual(const FluidSpace& space, const FluidStepInputs& in,
                                      const FluidStepResult& out);

/// (b^T M_J^{-1} b, b_v^T M^{-1} b_v) for the fluid load b with the J^n mass on
/// free dofs and the structure load b_v with the beam mass.
std::pair<double, double> forcing_dual_norms(const FluidSpace& space, const AleMap& map_n,
                                             const ForcingPair& force);

/// (G dW, (u, v)) for given loads.
double pair_forcing(const FluidSpace& space, const ForcingPair& force, const NodalField& u,
                    const BeamCoeffs& v);

}  // namespace stochfsi
