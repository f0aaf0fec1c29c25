#pragma once

#include <algorithm>
#include <cmath>

#include "stochfsi/ale.hpp"
#include "stochfsi/fluid.hpp"
#include "stochfsi/noise.hpp"
#include "stochfsi/structure.hpp"

namespace stochfsi {

/// Per-step energy bookkeeping. E uses the artificial map of its time level
/// for the fluid kinetic term: E^n and E^{n+1/2} with J^n_*, E^{n+1} with J^{n+1}_*.
struct LedgerRow {
  double e_n = 0.0, e_half = 0.0, e_np1 = 0.0;
  double d1 = 0.0;  ///< eps dt |d_zz v^{n+1/2}|^2
  double c1 = 0.0;  ///< 1/2 |v^{n+1/2}-v^n|^2 + 1/2 |eta^{n+1/2}-eta^n|_K^2
  double d2_viscous = 0.0, d2_slip = 0.0, d2_div = 0.0, d2_normal = 0.0;
  double c2 = 0.0;  ///< 1/4 int J^n |u^{n+1}-u^n|^2 + 1/4 |v^{n+1}-v^{n+1/2}|^2
  double pressure_work = 0.0;
  double stochastic_work = 0.0;   ///< (G dW, U^n), U^n = (u^n, v^n)
  double stochastic_new = 0.0;    ///< (G dW, U^{n+1})
  double noise_quadratic = 0.0;   ///< |G(u^n, eta^n_*) dW|^2
  double forcing_dual = 0.0;      ///< b^T M_J^{-1} b + 2 b_v^T M^{-1} b_v
  double v_jump_sq = 0.0;         ///< |v^{n+1/2} - v^n|^2
  int picard_iterations = 0;
  double picard_residual = 0.0;
  int substeps = 1;

  double d2() const { return d2_viscous + d2_slip + d2_div + d2_normal; }
  double dissipation() const { return d1 + d2(); }
  double numerical_dissipation() const { return c1 + c2; }
  double energy2_lhs() const { return e_np1 + d2() + c2; }
  double energy2_rhs() const {
    return e_half + std::abs(pressure_work) + forcing_dual + std::abs(stochastic_work) +
           0.25 * v_jump_sq;
  }
};

struct StepStates {
  NodalField u_n, u_np1;
  BeamCoeffs eta_n, v_n, eta_half, v_half, v_np1;
};

/// E = 1/2 int J |u|^2 + 1/2 |v|_M^2 + 1/2 |eta|_K^2
double total_energy(const FluidSpace& space, const AleMap& map, const NodalField& u,
                    const BeamCoeffs& v, const BeamCoeffs& eta);

/// Assembles a row from the states of one step. `fluid` holds the fluid
/// budget terms (summed over sub-steps if the step was subdivided).
LedgerRow ledger_step(const FluidSpace& space, const StepStates& s, const AleMap& star_n,
                      const AleMap& star_np1, const FluidBudget& fluid, const ForcingPair& force,
                      double noise_quadratic, double dt, double eps);

/// |E^{n+1/2} + D_1 + C_1 - E^n|
double verify_structure_identity(const LedgerRow& row);
/// |E^{n+1} - E^{n+1/2} + D_2 + 2 C_2 - P - (G dW, U^{n+1})|
double verify_fluid_budget(const LedgerRow& row);

inline double structure_tolerance(const LedgerRow& r) { return 1e-10 * std::max(r.e_n, 1.0); }
inline double fluid_tolerance(const LedgerRow& r, double picard_tol) {
  return 10.0 * picard_tol * std::max(r.e_n, 1.0);
}

}  // namespace stochfsi
