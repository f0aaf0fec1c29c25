#include "stochfsi/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stochfsi {

MeanEstimate estimate_mean(const std::vector<double>& x) {
  MeanEstimate m;
  if (x.empty()) return m;
  double sum = 0.0;
  for (double v : x) sum += v;
  m.mean = sum / x.size();
  if (x.size() < 2) return m;
  double ss = 0.0;
  for (double v : x) ss += (v - m.mean) * (v - m.mean);
  const double sd = std::sqrt(ss / (x.size() - 1));
  m.half_width = 1.96 * sd / std::sqrt(static_cast<double>(x.size()));
  return m;
}

double max_energy(const TrajectoryRecord& p) {
  double e = p.ledger.empty() ? 0.0 : p.ledger.front().e_n;
  for (const LedgerRow& r : p.ledger) e = std::max({e, r.e_n, r.e_np1});
  return e;
}

EnsembleStats ensemble_stats(const std::vector<TrajectoryRecord>& paths) {
  EnsembleStats st;
  st.paths = static_cast<int>(paths.size());
  if (paths.size() < 2) st.warning = "fewer than 2 paths: confidence half-widths are not meaningful";
  std::vector<double> emax, diss, num, div, nor;
  for (const TrajectoryRecord& p : paths) {
    if (p.failed) ++st.failed_paths;
    ++st.stopping_histogram[p.stopping_step];
    double d = 0.0, c = 0.0, dv = 0.0, nr = 0.0;
    for (const LedgerRow& r : p.ledger) {
      d += r.dissipation();
      c += r.numerical_dissipation();
      dv += r.d2_div;
      nr += r.d2_normal;
    }
    emax.push_back(max_energy(p));
    diss.push_back(d);
    num.push_back(c);
    div.push_back(dv);
    nor.push_back(nr);
  }
  st.max_energy = estimate_mean(emax);
  st.total_dissipation = estimate_mean(diss);
  st.numerical_dissipation = estimate_mean(num);
  st.div_penalty = estimate_mean(div);
  st.normal_penalty = estimate_mean(nor);
  return st;
}

namespace {
double ratio(double fine, double coarse) {
  if (coarse == 0.0) return fine == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return fine / coarse;
}
}  // namespace

RefinementRatios compare_refinement(const EnsembleStats& coarse, const EnsembleStats& fine) {
  return {ratio(fine.max_energy.mean, coarse.max_energy.mean),
          ratio(fine.total_dissipation.mean, coarse.total_dissipation.mean),
          ratio(fine.numerical_dissipation.mean, coarse.numerical_dissipation.mean)};
}

std::vector<PenaltyRow> penalty_scaling_report(
    const std::vector<std::pair<double, EnsembleStats>>& by_eps, double slack) {
  std::vector<PenaltyRow> rows;
  for (const auto& [eps, st] : by_eps)
    rows.push_back({eps, st.div_penalty.mean, st.normal_penalty.mean, 1.0, 1.0, true});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const PenaltyRow& a, const PenaltyRow& b) { return a.eps > b.eps; });
  if (rows.empty()) return rows;
  const double div0 = rows.front().div_mean, nor0 = rows.front().normal_mean;
  constexpr double floor = 1e-14;  // both ~0 counts as bounded
  for (PenaltyRow& r : rows) {
    r.div_ratio = ratio(r.div_mean, div0);
    r.normal_ratio = ratio(r.normal_mean, nor0);
    const bool div_ok = r.div_mean <= slack * div0 || r.div_mean <= floor;
    const bool nor_ok = r.normal_mean <= slack * nor0 || r.normal_mean <= floor;
    r.pass = div_ok && nor_ok;
  }
  return rows;
}

double fit_gronwall_rate(const std::vector<TrajectoryRecord>& paths, double T) {
  double worst = 0.0;
  for (const TrajectoryRecord& p : paths) {
    if (p.ledger.empty()) continue;
    const double e0 = p.ledger.front().e_n;
    if (!(e0 > 0.0)) continue;
    worst = std::max(worst, std::log(max_energy(p) / e0) / T);
  }
  return 2.0 * worst;
}

bool within_gronwall_envelope(const TrajectoryRecord& p, double rate, double T) {
  if (p.ledger.empty()) return true;
  const double e0 = p.ledger.front().e_n;
  return max_energy(p) <= e0 * std::exp(rate * T) * (1.0 + 1e-12);
}

double time_shift_modulus(const TrajectoryRecord& traj, const SchemeModel& model, int j,
                          double beta) {
  if (j < 0) throw ConfigurationError("time shift must be a nonnegative multiple of dt");
  if (j == 0) return 0.0;
  const ReferenceMesh& m = *model.mesh();
  const InterfaceSpectrum spectrum(m.length(), m.nz());
  const BeamSpace& beam = model.beam();
  double sum = 0.0;
  const int last = static_cast<int>(traj.u.size()) - 1;
  for (int n = j; n <= last; ++n) {
    const double du = m.norm(traj.u[n] - traj.u[n - j]);
    const BeamCoeffs dv = traj.v[n] - traj.v[n - j];
    std::vector<Vec2> samples(m.nz() + 1);
    for (int i = 0; i <= m.nz(); ++i) samples[i] = beam.evaluate(dv, i * m.hz());
    const double vn = spectrum.weighted_norm(samples, -beta);
    sum += du * du + vn * vn;
  }
  return traj.dt * sum;
}

PathCheck check_path(const TrajectoryRecord& p, double picard_tol) {
  PathCheck c;
  for (const LedgerRow& r : p.ledger) {
    c.max_structure_residual =
        std::max(c.max_structure_residual, verify_structure_identity(r) / structure_tolerance(r));
    c.max_fluid_residual =
        std::max(c.max_fluid_residual, verify_fluid_budget(r) / fluid_tolerance(r, picard_tol));
    c.min_dissipation = std::min({c.min_dissipation, r.d1, r.d2_viscous, r.d2_slip, r.d2_div,
                                  r.d2_normal, r.c1, r.c2});
    if (r.substeps == 1) {
      c.max_energy2_excess = std::max(
          c.max_energy2_excess, (r.energy2_lhs() - r.energy2_rhs()) / fluid_tolerance(r, picard_tol));
      ++c.checked_rows;
    } else {
      ++c.skipped_rows;
    }
  }
  return c;
}

}  // namespace stochfsi
