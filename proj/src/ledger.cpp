#include "stochfsi/ledger.hpp"

#include <cmath>

namespace stochfsi {

double total_energy(const FluidSpace& space, const AleMap& map, const NodalField& u,
                    const BeamCoeffs& v, const BeamCoeffs& eta) {
  const ReferenceMesh& m = space.mesh();
  double fluid = 0.0;
  for (int q = 0; q < m.num_quad(); ++q)
    fluid += map.jacobian()[q] * m.evaluate(u, m.quad_point(q)).value.squaredNorm();
  fluid *= 0.5 * m.quad_weight();
  const ElasticOperator& op = space.elastic();
  return fluid + 0.5 * quad_form(op.mass, v) + 0.5 * quad_form(op.stiffness, eta);
}

LedgerRow ledger_step(const FluidSpace& space, const StepStates& s, const AleMap& star_n,
                      const AleMap& star_np1, const FluidBudget& fluid, const ForcingPair& force,
                      double noise_quadratic, double dt, double eps) {
  const ElasticOperator& op = space.elastic();
  LedgerRow r;
  r.e_n = total_energy(space, star_n, s.u_n, s.v_n, s.eta_n);
  r.e_half = total_energy(space, star_n, s.u_n, s.v_half, s.eta_half);
  r.e_np1 = total_energy(space, star_np1, s.u_np1, s.v_np1, s.eta_half);
  r.d1 = eps * dt * quad_form(op.regularizer, s.v_half);
  r.v_jump_sq = quad_form(op.mass, s.v_half - s.v_n);
  r.c1 = 0.5 * r.v_jump_sq + 0.5 * quad_form(op.stiffness, s.eta_half - s.eta_n);
  r.d2_viscous = fluid.d2_viscous;
  r.d2_slip = fluid.d2_slip;
  r.d2_div = fluid.d2_div;
  r.d2_normal = fluid.d2_normal;
  r.c2 = fluid.c2;
  r.pressure_work = fluid.pressure_work;
  r.stochastic_new = fluid.stochastic_new;
  r.stochastic_work = pair_forcing(space, force, s.u_n, s.v_n);
  r.noise_quadratic = noise_quadratic;
  const auto [df, ds] = forcing_dual_norms(space, star_n, force);
  r.forcing_dual = df + 2.0 * ds;
  return r;
}

double verify_structure_identity(const LedgerRow& r) {
  return std::abs(r.e_half + r.d1 + r.c1 - r.e_n);
}

double verify_fluid_budget(const LedgerRow& r) {
  return std::abs(r.e_np1 - r.e_half + r.d2() + 2.0 * r.c2 - r.pressure_work - r.stochastic_new);
}

}  // namespace stochfsi
