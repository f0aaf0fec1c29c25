#pragma once

#include <map>
#include <string>
#include <vector>

#include "stochfsi/ledger.hpp"
#include "stochfsi/scheme.hpp"
#include "stochfsi/spectrum.hpp"

namespace stochfsi {

/// Mean and 95% normal-approximation half-width.
struct MeanEstimate {
  double mean = 0.0;
  double half_width = 0.0;
};

MeanEstimate estimate_mean(const std::vector<double>& samples);

struct EnsembleStats {
  int paths = 0;
  MeanEstimate max_energy;           ///< E[max_n E^n]
  MeanEstimate total_dissipation;    ///< E[sum_n D_1 + D_2]
  MeanEstimate numerical_dissipation;///< E[sum_n C_1 + C_2]
  MeanEstimate div_penalty;          ///< E[sum_n dt/eps |div^eta u^{n+1}|^2]
  MeanEstimate normal_penalty;       ///< E[sum_n dt/eps |(u^{n+1}-v^{n+1}).n|^2]
  std::map<int, int> stopping_histogram;
  int failed_paths = 0;
  std::string warning;
};

EnsembleStats ensemble_stats(const std::vector<TrajectoryRecord>& paths);

double max_energy(const TrajectoryRecord& path);

struct RefinementRatios {
  double max_energy = 0.0;
  double total_dissipation = 0.0;
  double numerical_dissipation = 0.0;
};

/// fine / coarse ratios of the ensemble means.
RefinementRatios compare_refinement(const EnsembleStats& coarse, const EnsembleStats& fine);

struct PenaltyRow {
  double eps = 0.0;
  double div_mean = 0.0, normal_mean = 0.0;
  double div_ratio = 1.0, normal_ratio = 1.0;  ///< relative to the coarsest (largest) eps
  bool pass = true;
};

/// Rows sorted by decreasing eps; a row passes when both penalty means stay
/// within `slack` times their coarsest-eps value.
std::vector<PenaltyRow> penalty_scaling_report(
    const std::vector<std::pair<double, EnsembleStats>>& by_eps, double slack = 2.0);

/// C = 2 max_paths log(max_n E^n / E^0) / T (0 if no path grows).
double fit_gronwall_rate(const std::vector<TrajectoryRecord>& paths, double T);
/// max_n E^n <= E^0 exp(C T) (with a 1e-12 relative allowance).
bool within_gronwall_envelope(const TrajectoryRecord& path, double rate, double T);

/// dt sum_{n >= j} (|u^n - u^{n-j}|^2_{L2} + |v^n - v^{n-j}|^2_{H^-beta}) with
/// h = j dt. The dual norm uses the interface eigenbasis on the Gamma nodes.
double time_shift_modulus(const TrajectoryRecord& traj, const SchemeModel& model, int shift_steps,
                          double beta = 0.25);

struct PathCheck {
  double max_structure_residual = 0.0;  ///< max over rows of residual / tolerance
  double max_fluid_residual = 0.0;
  double max_energy2_excess = 0.0;      ///< max of (lhs - rhs) / fluid tolerance, single-step rows
  double min_dissipation = 0.0;
  int checked_rows = 0;
  int skipped_rows = 0;
  bool pass() const {
    return max_structure_residual <= 1.0 && max_fluid_residual <= 1.0 &&
           max_energy2_excess <= 1.0 && min_dissipation >= -1e-12;
  }
};

/// Checks every ledger row of a path against the identities and the inequality.
PathCheck check_path(const TrajectoryRecord& path, double picard_tol);

}  // namespace stochfsi
