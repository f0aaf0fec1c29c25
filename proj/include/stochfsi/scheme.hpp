#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stochfsi/ale.hpp"
#include "stochfsi/fluid.hpp"
#include "stochfsi/ledger.hpp"
#include "stochfsi/noise.hpp"
#include "stochfsi/structure.hpp"

namespace stochfsi {

enum class WaveShape { Constant, Pulse };

/// P(t) = amplitude (constant) or amplitude sin^2(pi t / period) on [0, period], 0 after.
struct PressureWaveform {
  WaveShape shape = WaveShape::Constant;
  double amplitude = 0.0;
  double period = 1.0;

  double operator()(double t) const;
  /// (1/(t1-t0)) int_{t0}^{t1} P dt with 4-point Gauss.
  double average(double t0, double t1) const;
};

struct SchemeConfig {
  double T = 0.0;
  int N = 0;
  double eps = 0.0;
  double delta1 = 0.0, delta2 = 0.0;
  double s_exp = 1.75;
  double alpha = 1.0, nu = 0.1;
  PressureWaveform p_in, p_out;
  double length = 1.0;
  int nz = 8, nr = 8, beam_elements = 16;
  double c_b = 1.0, c_0 = 0.0;
  bool noise = true;
  int noise_modes = 4;
  double noise_decay = 2.0;
  double noise_gain = 0.5;
  SlipProjection slip = SlipProjection::Full;
  DivQuadrature div_rule = DivQuadrature::Centroid;
  double picard_tol = 1e-10;
  int max_picard = 50;
  int max_halvings = 4;
  // Initial data: eta_0 = v_0 profile (1 - cos(2 pi z / L))/2 e_r, u_0 = u0_amp (1 - r^2) e_z.
  double eta0_amp = 0.0, v0_amp = 0.0, u0_amp = 0.0;

  double dt() const { return T / N; }
  /// Throws ConfigurationError naming the offending field.
  void validate() const;
};

/// Discretization objects shared (read-only) by all paths of one configuration.
class SchemeModel {
public:
  explicit SchemeModel(const SchemeConfig& cfg);
  SchemeModel(const SchemeModel&) = delete;
  SchemeModel& operator=(const SchemeModel&) = delete;

  const SchemeConfig& config() const { return cfg_; }
  const MeshPtr& mesh() const { return mesh_; }
  const InterfaceQuadrature& iface() const { return *iface_; }
  const BeamSpace& beam() const { return *beam_; }
  const ElasticOperator& elastic() const { return *elastic_; }
  const HarmonicExtension& extension() const { return *ext_; }
  const FluidSpace& fluid() const { return *fluid_; }
  const NoiseCoefficient& noise() const { return *noise_; }
  const StructureStepper& stepper() const { return *stepper_; }
  const std::vector<double>& noise_spectrum() const { return q_; }

  InterfaceTrace trace(const BeamCoeffs& eta) const;
  AleMap map_of(const BeamCoeffs& eta) const;
  /// |eta|_{H^2_0} = sqrt(eta^T K eta)
  double h2_norm(const BeamCoeffs& eta) const;

  StructureState initial_structure() const;
  NodalField initial_fluid() const;

private:
  SchemeConfig cfg_;
  MeshPtr mesh_;
  std::shared_ptr<const InterfaceQuadrature> iface_;
  std::shared_ptr<const BeamSpace> beam_;
  std::shared_ptr<const ElasticOperator> elastic_;
  std::unique_ptr<HarmonicExtension> ext_;
  std::unique_ptr<FluidSpace> fluid_;
  std::vector<double> q_;
  std::unique_ptr<NoiseCoefficient> noise_;
  std::unique_ptr<StructureStepper> stepper_;
  Eigen::SparseMatrix<double> gamma_values_, iface_slopes_;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  int N = 0;
  double dt = 0.0;
  std::vector<NodalField> u;          ///< u^n, n = 0..steps
  std::vector<BeamCoeffs> v;          ///< v^n
  std::vector<BeamCoeffs> v_half;     ///< v^{n+1/2}, n = 0..steps-1
  std::vector<BeamCoeffs> eta;        ///< eta^n
  std::vector<BeamCoeffs> eta_star;   ///< eta^n_*
  std::vector<int> star_index;        ///< index k with eta^n_* = eta^k
  std::vector<std::uint8_t> theta;    ///< cut-off flag after step n
  std::vector<GeometryBounds> bounds; ///< bounds of the true map A_{eta^n}
  std::vector<LedgerRow> ledger;      ///< row n covers [t^n, t^{n+1}]
  std::vector<Eigen::VectorXd> increments;
  std::vector<double> amplitudes;     ///< a(u^n, eta^n_*) c per step
  int stopping_step = 0;
  bool failed = false;
  std::string failure;

  int steps() const { return static_cast<int>(ledger.size()); }
};

/// 1 iff every entry satisfies j_min > delta1 and eta_norm < 1/delta2.
bool compute_cutoff(const std::vector<GeometryBounds>& history, double delta1, double delta2);
/// Index k of the artificial displacement at step n: the largest k <= n up to
/// which the cut-off holds, 0 if it never holds.
int artificial_index(const std::vector<GeometryBounds>& history, int n, double delta1,
                     double delta2);
/// eta^n_* = eta^{artificial_index}.
BeamCoeffs update_artificial(const TrajectoryRecord& traj, int n, double delta1, double delta2);

/// First step at which the true eta violates a bound, or N if none does.
int detect_stopping_time(const TrajectoryRecord& traj, double delta1, double delta2);

/// Throws ConfigurationError unless j_min > delta1, eta_norm < 1/delta2 and
/// |eta_0|_{H^2_0} < 1/delta2.
void check_initial_compliance(const SchemeModel& model, const AleMap& map0,
                              const BeamCoeffs& eta0);

TrajectoryRecord run_path(const SchemeModel& model, std::uint64_t seed);
TrajectoryRecord run_path(const SchemeConfig& cfg, std::uint64_t seed);

/// Paths with seeds seed_base + i, run on `threads` workers; result i is path i.
std::vector<TrajectoryRecord> run_ensemble(const SchemeModel& model, std::uint64_t seed_base,
                                           int paths, int threads);

/// Time interpolants of a trajectory (piecewise constant, shifted, linear).
class Interpolants {
public:
  explicit Interpolants(const TrajectoryRecord& traj);

  double dt() const { return dt_; }
  double final_time() const { return dt_ * steps_; }
  /// Interval index n with t in [t^n, t^{n+1}) (left-continuous families).
  int left_index(double t) const;
  /// Interval index n with t in (t^n, t^{n+1}] (shifted families).
  int right_index(double t) const;

  NodalField u(double t) const;
  BeamCoeffs eta(double t) const;
  BeamCoeffs eta_star(double t) const;
  BeamCoeffs v(double t) const;
  BeamCoeffs v_sharp(double t) const;

  NodalField u_plus(double t) const;
  BeamCoeffs eta_plus(double t) const;
  BeamCoeffs v_plus(double t) const;

  NodalField u_lin(double t) const;
  BeamCoeffs eta_lin(double t) const;
  BeamCoeffs eta_star_lin(double t) const;
  BeamCoeffs v_lin(double t) const;
  /// d/dt of eta_lin on the open interval containing t.
  BeamCoeffs eta_lin_rate(double t) const;

private:
  template <class T>
  T lerp(const std::vector<T>& a, double t) const;

  const TrajectoryRecord* traj_;
  double dt_;
  int steps_;
};

}  // namespace stochfsi
