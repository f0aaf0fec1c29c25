#include "stochfsi/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "stochfsi/config.hpp"
#include "stochfsi/diagnostics.hpp"
#include "stochfsi/scheme.hpp"
#include "stochfsi/snapshot.hpp"

namespace stochfsi {

namespace {

constexpr int kSummarySchema = 1;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string path_file(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "path_%04d.snap", i);
  return buf;
}

std::string join(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

nlohmann::json estimate_json(const MeanEstimate& m) {
  return {{"mean", m.mean}, {"half_width", m.half_width}};
}

nlohmann::json stats_json(const EnsembleStats& st) {
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [k, v] : st.stopping_histogram) hist[std::to_string(k)] = v;
  nlohmann::json j = {{"paths", st.paths},
                      {"failed_paths", st.failed_paths},
                      {"max_energy", estimate_json(st.max_energy)},
                      {"total_dissipation", estimate_json(st.total_dissipation)},
                      {"numerical_dissipation", estimate_json(st.numerical_dissipation)},
                      {"div_penalty", estimate_json(st.div_penalty)},
                      {"normal_penalty", estimate_json(st.normal_penalty)},
                      {"stopping_histogram", hist}};
  if (!st.warning.empty()) j["warning"] = st.warning;
  return j;
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STOCHFSI_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::unique_ptr<SchemeModel> model;
  std::vector<TrajectoryRecord> paths;
  try {
    cfg = load_config(opt.config_path);
    if (opt.paths) cfg.paths = *opt.paths;
    if (opt.seed) cfg.seed = *opt.seed;
    if (cfg.paths < 1) throw ConfigurationError("paths must be >= 1");
    model = std::make_unique<SchemeModel>(cfg.scheme);
    paths = run_ensemble(*model, cfg.seed, cfg.paths, resolve_threads(opt.threads));
  } catch (const ConfigurationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  std::filesystem::create_directories(opt.out_dir);
  const std::string text = canonical_config(cfg);
  const std::uint64_t hash = fnv1a64(text);
  nlohmann::json per_path = nlohmann::json::array();
  bool ok = true;
  for (int i = 0; i < cfg.paths; ++i) {
    const TrajectoryRecord& p = paths[i];
    write_snapshot(join(opt.out_dir, path_file(i)), Snapshot{text, hash, p});
    const PathCheck c = check_path(p, cfg.scheme.picard_tol);
    ok = ok && !p.failed && c.pass();
    nlohmann::json j = {{"seed", p.seed},
                        {"file", path_file(i)},
                        {"steps", p.steps()},
                        {"stopping_step", p.stopping_step},
                        {"failed", p.failed},
                        {"max_energy", max_energy(p)},
                        {"structure_residual_ratio", c.max_structure_residual},
                        {"fluid_residual_ratio", c.max_fluid_residual},
                        {"energy_inequality_excess", c.max_energy2_excess},
                        {"checks_pass", c.pass()}};
    if (p.failed) j["failure"] = p.failure;
    per_path.push_back(j);
  }
  nlohmann::json summary = {{"schema_version", kSummarySchema},
                            {"config_hash", hex64(hash)},
                            {"seed_base", cfg.seed},
                            {"N", cfg.scheme.N},
                            {"dt", cfg.scheme.dt()},
                            {"eps", cfg.scheme.eps},
                            {"paths", per_path},
                            {"ensemble", stats_json(ensemble_stats(paths))}};
  write_atomic(join(opt.out_dir, "summary.json"), summary.dump(2) + "\n");
  out << "wrote " << cfg.paths << " snapshot(s) and summary.json to " << opt.out_dir << "\n";
  return ok ? 0 : 1;
}

int cmd_verify(const std::string& snapshot_path, std::ostream& out, std::ostream& err) {
  Snapshot snap;
  RunConfig cfg;
  std::unique_ptr<SchemeModel> model;
  try {
    snap = read_snapshot(snapshot_path);
    cfg = parse_config(snap.config_text, snapshot_path + "[config]");
    model = std::make_unique<SchemeModel>(cfg.scheme);
  } catch (const std::exception& e) {
    err << "schema error: " << e.what() << "\n";
    return 3;
  }
  const TrajectoryRecord& t = snap.traj;
  const SchemeConfig& sc = cfg.scheme;
  const SchemeModel& m = *model;
  const int steps = t.steps();
  if (t.N != sc.N || t.dt != sc.dt() || t.u.front().rows() != m.mesh()->num_nodes() ||
      t.v.front().rows() != m.beam().ndof() ||
      (steps > 0 && t.increments.front().size() != sc.noise_modes)) {
    err << "schema error: arrays do not match the embedded configuration\n";
    return 3;
  }

  double structure_ratio = 0.0, structure_solve = 0.0, fluid_ratio = 0.0, bounds_diff = 0.0;
  double increment_diff = 0.0;
  int fluid_checked = 0, fluid_skipped = 0;
  bool latch_ok = true;
  const WienerProcess wiener = make_wiener(sc.noise_modes, sc.noise_decay, t.seed);
  auto star = std::make_shared<const AleMap>(m.map_of(t.eta_star[0]));
  bool theta = true;
  for (int n = 0; n <= steps; ++n) {
    const GeometryBounds b = m.map_of(t.eta[n]).bounds();
    bounds_diff = std::max({bounds_diff, std::abs(b.j_min - t.bounds[n].j_min),
                            std::abs(b.eta_norm - t.bounds[n].eta_norm)});
    if (n > 0) theta = theta && b.j_min > sc.delta1 && b.eta_norm < 1.0 / sc.delta2;
    latch_ok = latch_ok && (t.theta[n] != 0) == theta &&
               t.star_index[n] >= 0 && t.star_index[n] <= n &&
               t.eta_star[n] == t.eta[t.star_index[n]] &&
               (theta ? t.star_index[n] == n : (n > 0 && t.star_index[n] == t.star_index[n - 1]));
  }
  latch_ok = latch_ok && t.stopping_step == detect_stopping_time(t, sc.delta1, sc.delta2);

  for (int n = 0; n < steps; ++n) {
    const StructureState half = m.stepper().step({t.eta[n], t.v[n]});
    structure_solve = std::max({structure_solve, rel_diff(half.v, t.v_half[n]),
                                rel_diff(half.eta, t.eta[n + 1])});
    if (sc.noise)
      increment_diff = std::max(increment_diff,
                                (increment_at(wiener, n, t.dt) - t.increments[n]).norm());

    auto star_next = std::make_shared<const AleMap>(m.map_of(t.eta_star[n + 1]));
    FluidStepInputs in;
    in.u_prev = t.u[n];
    in.v_half = t.v_half[n];
    in.map_n = star;
    in.map_np1 = star_next;
    in.w = ale_velocity(*star, *star_next, t.dt);
    const double amp = m.noise().amplitude(t.u[n], t.eta_star[n]);
    in.force = m.noise().apply_amplitude(amp, t.increments[n]);
    in.p_in = sc.p_in.average(n * t.dt, (n + 1) * t.dt);
    in.p_out = sc.p_out.average(n * t.dt, (n + 1) * t.dt);
    in.dt = t.dt;
    in.eps = sc.eps;
    in.alpha = sc.alpha;
    in.nu = sc.nu;
    in.slip = sc.slip;
    in.div_rule = sc.div_rule;
    const FluidBudget fb = fluid_budget(m.fluid(), in, t.u[n + 1], t.v[n + 1]);
    StepStates ss{t.u[n], t.u[n + 1], t.eta[n], t.v[n], t.eta[n + 1], t.v_half[n], t.v[n + 1]};
    const LedgerRow row = ledger_step(m.fluid(), ss, *star, *star_next, fb, in.force, 0.0, t.dt, sc.eps);
    structure_ratio = std::max(structure_ratio, verify_structure_identity(row) / structure_tolerance(row));
    if (t.ledger[n].substeps == 1) {
      fluid_ratio = std::max(fluid_ratio, verify_fluid_budget(row) / fluid_tolerance(row, sc.picard_tol));
      ++fluid_checked;
    } else {
      ++fluid_skipped;
    }
    star = star_next;
  }

  bool ok = true;
  auto report = [&](bool pass, const std::string& name, const std::string& detail) {
    out << (pass ? "PASS " : "FAIL ") << name << " " << detail << "\n";
    ok = ok && pass;
  };
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(3);
    s << std::scientific << v;
    return s.str();
  };
  report(structure_ratio <= 1.0, "structure_energy_identity", "residual/tol=" + num(structure_ratio));
  report(structure_solve <= 1e-10, "structure_substep_replay", "rel_diff=" + num(structure_solve));
  report(fluid_ratio <= 1.0, "fluid_energy_identity",
         "residual/tol=" + num(fluid_ratio) + " checked=" + std::to_string(fluid_checked) +
             " skipped_substepped=" + std::to_string(fluid_skipped));
  report(bounds_diff <= 1e-10, "geometry_bounds_replay", "max_diff=" + num(bounds_diff));
  report(latch_ok, "cutoff_latch_and_stopping_time",
         "stopping_step=" + std::to_string(t.stopping_step));
  report(increment_diff == 0.0, "wiener_increment_replay", "max_diff=" + num(increment_diff));
  if (t.failed) out << "NOTE path was truncated: " << t.failure << "\n";
  return ok ? 0 : 1;
}

int cmd_sweep(const RunOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  std::vector<std::pair<int, double>> grid;
  try {
    cfg = load_config(opt.config_path);
    if (opt.paths) cfg.paths = *opt.paths;
    if (opt.seed) cfg.seed = *opt.seed;
    grid = cfg.sweep_grid();
    if (grid.empty()) throw ConfigurationError("sweep grid is empty (set sweep_N and sweep_eps)");
  } catch (const ConfigurationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  const int threads = resolve_threads(opt.threads);
  std::vector<EnsembleStats> stats;
  std::vector<std::pair<double, EnsembleStats>> by_eps;
  std::vector<bool> envelope_ok;
  double rate = 0.0;
  bool any_failed = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SchemeConfig sc = cfg.scheme;
    sc.N = grid[g].first;
    sc.eps = grid[g].second;
    std::vector<TrajectoryRecord> paths;
    try {
      const SchemeModel model(sc);
      paths = run_ensemble(model, cfg.seed, cfg.paths, threads);
    } catch (const ConfigurationError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    }
    if (g == 0) rate = fit_gronwall_rate(paths, sc.T);
    bool env = true;
    for (const auto& p : paths) env = env && within_gronwall_envelope(p, rate, sc.T);
    envelope_ok.push_back(env);
    stats.push_back(ensemble_stats(paths));
    by_eps.emplace_back(sc.eps, stats.back());
    any_failed = any_failed || stats.back().failed_paths > 0;
    out << "grid point N=" << sc.N << " eps=" << sc.eps << " done\n";
  }

  std::ostringstream b;
  b.precision(17);
  b << "N,eps,paths,failed_paths,mean_max_energy,half_width,mean_dissipation,"
       "mean_numerical_dissipation,ratio_to_previous,within_gronwall_envelope\n";
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const EnsembleStats& s = stats[g];
    const double ratio =
        g == 0 ? 1.0 : compare_refinement(stats[g - 1], s).max_energy;
    b << grid[g].first << "," << grid[g].second << "," << s.paths << "," << s.failed_paths << ","
      << s.max_energy.mean << "," << s.max_energy.half_width << "," << s.total_dissipation.mean
      << "," << s.numerical_dissipation.mean << "," << ratio << ","
      << (envelope_ok[g] ? 1 : 0) << "\n";
  }
  std::ostringstream p;
  p.precision(17);
  p << "eps,mean_div_penalty,mean_normal_penalty,div_ratio,normal_ratio,pass\n";
  bool penalty_ok = true;
  for (const PenaltyRow& r : penalty_scaling_report(by_eps)) {
    p << r.eps << "," << r.div_mean << "," << r.normal_mean << "," << r.div_ratio << ","
      << r.normal_ratio << "," << (r.pass ? 1 : 0) << "\n";
    penalty_ok = penalty_ok && r.pass;
  }
  std::filesystem::create_directories(opt.out_dir);
  write_atomic(join(opt.out_dir, "boundedness.csv"), b.str());
  write_atomic(join(opt.out_dir, "penalty_scaling.csv"), p.str());
  out << "wrote boundedness.csv and penalty_scaling.csv to " << opt.out_dir << "\n";
  if (!penalty_ok) out << "note: penalty scaling exceeded the 2x bound at some grid point\n";
  return any_failed ? 1 : 0;
}

}  // namespace stochfsi
