#include "stochfsi/scheme.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "stochfsi/quadrature.hpp"

namespace stochfsi {

double PressureWaveform::operator()(double t) const {
  if (shape == WaveShape::Constant) return amplitude;
  if (t < 0.0 || t > period) return 0.0;
  const double s = std::sin(std::numbers::pi * t / period);
  return amplitude * s * s;
}

double PressureWaveform::average(double t0, double t1) const {
  static const GaussRule g = gauss_legendre(4);
  double sum = 0.0;
  for (std::size_t k = 0; k < g.points.size(); ++k)
    sum += g.weights[k] * (*this)(t0 + g.points[k] * (t1 - t0));
  return sum;
}

void SchemeConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigurationError(std::string("invalid configuration: ") + what);
  };
  need(T > 0.0, "T must be > 0");
  need(N >= 1, "N must be >= 1");
  need(eps > 0.0, "eps must be > 0");
  need(delta1 > 0.0, "delta1 must be > 0");
  need(delta2 > 0.0, "delta2 must be > 0");
  need(s_exp > 1.5 && s_exp < 2.0, "s_exp must lie in (3/2, 2)");
  need(alpha > 0.0, "alpha must be > 0");
  need(nu > 0.0, "nu must be > 0");
  need(length > 0.0, "length must be > 0");
  need(nz >= 2 && nr >= 2, "nz and nr must be >= 2");
  need(beam_elements >= 2, "beam_elements must be >= 2");
  need(c_b > 0.0, "c_b must be > 0");
  need(c_0 >= 0.0, "c_0 must be >= 0");
  need(noise_modes >= 1, "noise_modes must be >= 1");
  need(noise_decay >= 0.0, "noise_decay must be >= 0");
  need(noise_gain >= 0.0 && noise_gain <= 1.0, "noise_gain must lie in [0, 1]");
  need(picard_tol > 0.0, "picard_tol must be > 0");
  need(max_picard >= 1, "max_picard must be >= 1");
  need(max_halvings >= 0, "max_halvings must be >= 0");
  need(p_in.period > 0.0 && p_out.period > 0.0, "pressure periods must be > 0");
}

SchemeModel::SchemeModel(const SchemeConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  mesh_ = std::make_shared<const ReferenceMesh>(cfg_.length, cfg_.nz, cfg_.nr);
  iface_ = std::make_shared<const InterfaceQuadrature>(cfg_.length, cfg_.nz, cfg_.beam_elements);
  beam_ = std::make_shared<const BeamSpace>(cfg_.length, cfg_.beam_elements);
  elastic_ = std::make_shared<const ElasticOperator>(assemble_elastic(beam_, cfg_.c_b, cfg_.c_0));
  ext_ = std::make_unique<HarmonicExtension>(mesh_, iface_, cfg_.s_exp);
  fluid_ = std::make_unique<FluidSpace>(mesh_, iface_, elastic_);
  q_ = make_wiener(cfg_.noise_modes, cfg_.noise_decay, 0).q;
  noise_ = std::make_unique<NoiseCoefficient>(*ext_, *elastic_, q_,
                                              cfg_.noise ? cfg_.noise_gain : 0.0);
  stepper_ = std::make_unique<StructureStepper>(*elastic_, cfg_.dt(), cfg_.eps);
  std::vector<double> zn(cfg_.nz + 1), zq(iface_->size());
  for (int i = 0; i <= cfg_.nz; ++i) zn[i] = i * mesh_->hz();
  for (int q = 0; q < iface_->size(); ++q) zq[q] = iface_->z(q);
  gamma_values_ = beam_->evaluation_matrix(zn, 0);
  iface_slopes_ = beam_->evaluation_matrix(zq, 1);
}

InterfaceTrace SchemeModel::trace(const BeamCoeffs& eta) const {
  const BeamCoeffs nodal = gamma_values_ * eta;
  const BeamCoeffs slope = iface_slopes_ * eta;
  InterfaceTrace t;
  t.nodal.resize(nodal.rows());
  t.slope.resize(slope.rows());
  for (int i = 0; i < nodal.rows(); ++i) t.nodal[i] = nodal.row(i).transpose();
  for (int q = 0; q < slope.rows(); ++q) t.slope[q] = slope.row(q).transpose();
  return t;
}

AleMap SchemeModel::map_of(const BeamCoeffs& eta) const { return ext_->extend(trace(eta)); }

double SchemeModel::h2_norm(const BeamCoeffs& eta) const {
  return std::sqrt(std::max(0.0, quad_form(elastic_->stiffness, eta)));
}

StructureState SchemeModel::initial_structure() const {
  const double len = cfg_.length;
  const double k = 2.0 * std::numbers::pi / len;
  auto profile = [&](double amp) {
    return beam_->interpolate(
        [=](double z) { return Vec2(0.0, amp * 0.5 * (1.0 - std::cos(k * z))); },
        [=](double z) { return Vec2(0.0, amp * 0.5 * k * std::sin(k * z)); });
  };
  return {profile(cfg_.eta0_amp), profile(cfg_.v0_amp)};
}

NodalField SchemeModel::initial_fluid() const {
  const double a = cfg_.u0_amp;
  return fluid_->constrain(
      mesh_->interpolate([a](const Vec2& x) { return Vec2(a * (1.0 - x.y() * x.y()), 0.0); }));
}

bool compute_cutoff(const std::vector<GeometryBounds>& history, double delta1, double delta2) {
  return std::all_of(history.begin(), history.end(), [&](const GeometryBounds& b) {
    return b.j_min > delta1 && b.eta_norm < 1.0 / delta2;
  });
}

int artificial_index(const std::vector<GeometryBounds>& history, int n, double delta1,
                     double delta2) {
  int k = 0;
  for (int i = 0; i <= n && i < static_cast<int>(history.size()); ++i) {
    const GeometryBounds& b = history[i];
    if (!(b.j_min > delta1 && b.eta_norm < 1.0 / delta2)) break;
    k = i;
  }
  return k;
}

BeamCoeffs update_artificial(const TrajectoryRecord& traj, int n, double delta1, double delta2) {
  return traj.eta.at(artificial_index(traj.bounds, n, delta1, delta2));
}

int detect_stopping_time(const TrajectoryRecord& traj, double delta1, double delta2) {
  for (std::size_t k = 0; k < traj.bounds.size(); ++k) {
    const GeometryBounds& b = traj.bounds[k];
    if (!(b.j_min > delta1 && b.eta_norm < 1.0 / delta2)) return static_cast<int>(k);
  }
  return traj.N;
}

void check_initial_compliance(const SchemeModel& model, const AleMap& map0,
                              const BeamCoeffs& eta0) {
  const SchemeConfig& c = model.config();
  const GeometryBounds& b = map0.bounds();
  if (!b.injective || !(b.j_min > c.delta1))
    throw ConfigurationError("initial data: inf J = " + std::to_string(b.j_min) +
                             " does not exceed delta1");
  if (!(b.eta_norm < 1.0 / c.delta2))
    throw ConfigurationError("initial data: interface norm of eta_0 is not below 1/delta2");
  if (!(model.h2_norm(eta0) < 1.0 / c.delta2))
    throw ConfigurationError("initial data: H2_0 norm of eta_0 is not below 1/delta2");
}

namespace {

struct IntervalResult {
  NodalField u;
  BeamCoeffs v;
  FluidBudget budget;
  int iterations = 0;
  double residual = 0.0;
  int leaves = 0;
};

void accumulate(FluidBudget& into, const FluidBudget& b) {
  into.c2 += b.c2;
  into.d2_viscous += b.d2_viscous;
  into.d2_slip += b.d2_slip;
  into.d2_div += b.d2_div;
  into.d2_normal += b.d2_normal;
  into.pressure_work += b.pressure_work;
  into.stochastic_new += b.stochastic_new;
}

struct IntervalContext {
  const SchemeModel& model;
  const WienerProcess& wiener;
  std::uint64_t step;
  double amplitude;
};

IntervalResult solve_interval(const IntervalContext& ctx, const FluidStepInputs& in,
                              const BeamCoeffs& eta_a, const BeamCoeffs& eta_b, double t0,
                              const Eigen::VectorXd& dw, std::uint32_t node, int depth) {
  const SchemeConfig& cfg = ctx.model.config();
  try {
    FluidStepResult r = fluid_substep(ctx.model.fluid(), in, cfg.picard_tol, cfg.max_picard);
    IntervalResult out;
    out.budget = fluid_budget(ctx.model.fluid(), in, r.u, r.v);
    out.u = std::move(r.u);
    out.v = std::move(r.v);
    out.iterations = r.report.iterations;
    out.residual = r.report.residual;
    out.leaves = 1;
    return out;
  } catch (const FluidStepFailure&) {
    if (depth >= cfg.max_halvings) throw;
  }
  const double h = 0.5 * in.dt;
  const BeamCoeffs eta_mid = 0.5 * (eta_a + eta_b);
  auto mid = std::make_shared<const AleMap>(ctx.model.map_of(eta_mid));
  const auto [dw1, dw2] = bridge_split(ctx.wiener, ctx.step, node, dw, in.dt);

  FluidStepInputs first = in;
  first.dt = h;
  first.map_np1 = mid;
  first.force = ctx.model.noise().apply_amplitude(ctx.amplitude, dw1);
  first.p_in = cfg.p_in.average(t0, t0 + h);
  first.p_out = cfg.p_out.average(t0, t0 + h);
  IntervalResult a = solve_interval(ctx, first, eta_a, eta_mid, t0, dw1, 2 * node, depth + 1);

  FluidStepInputs second = in;
  second.dt = h;
  second.u_prev = a.u;
  second.v_half = a.v;
  second.map_n = mid;
  second.force = ctx.model.noise().apply_amplitude(ctx.amplitude, dw2);
  second.p_in = cfg.p_in.average(t0 + h, t0 + in.dt);
  second.p_out = cfg.p_out.average(t0 + h, t0 + in.dt);
  IntervalResult b =
      solve_interval(ctx, second, eta_mid, eta_b, t0 + h, dw2, 2 * node + 1, depth + 1);

  accumulate(a.budget, b.budget);
  b.budget = a.budget;
  b.iterations += a.iterations;
  b.residual = std::max(a.residual, b.residual);
  b.leaves += a.leaves;
  return b;
}

}  // namespace

TrajectoryRecord run_path(const SchemeModel& model, std::uint64_t seed) {
  const SchemeConfig& cfg = model.config();
  const double dt = cfg.dt();
  TrajectoryRecord tr;
  tr.seed = seed;
  tr.N = cfg.N;
  tr.dt = dt;

  StructureState s = model.initial_structure();
  NodalField u = model.initial_fluid();
  auto star = std::make_shared<const AleMap>(model.map_of(s.eta));
  check_initial_compliance(model, *star, s.eta);
  const WienerProcess wiener = make_wiener(cfg.noise_modes, cfg.noise_decay, seed);

  tr.u.push_back(u);
  tr.v.push_back(s.v);
  tr.eta.push_back(s.eta);
  tr.eta_star.push_back(s.eta);
  tr.star_index.push_back(0);
  tr.theta.push_back(1);
  tr.bounds.push_back(star->bounds());
  bool theta = true;

  for (int n = 0; n < cfg.N; ++n) {
    const StructureState half = model.stepper().step(s);
    auto true_map = std::make_shared<const AleMap>(model.map_of(half.eta));
    const GeometryBounds& gb = true_map->bounds();
    theta = theta && gb.j_min > cfg.delta1 && gb.eta_norm < 1.0 / cfg.delta2;
    auto star_next = theta ? true_map : star;
    const int star_idx = theta ? n + 1 : tr.star_index.back();
    const BeamCoeffs eta_star_next = theta ? half.eta : tr.eta_star.back();

    const Eigen::VectorXd dw =
        cfg.noise ? increment_at(wiener, n, dt) : Eigen::VectorXd::Zero(cfg.noise_modes);
    const double amp = model.noise().amplitude(u, tr.eta_star.back());
    FluidStepInputs in;
    in.u_prev = u;
    in.v_half = half.v;
    in.map_n = star;
    in.map_np1 = star_next;
    in.w = ale_velocity(*star, *star_next, dt);
    in.force = model.noise().apply_amplitude(amp, dw);
    in.p_in = cfg.p_in.average(n * dt, (n + 1) * dt);
    in.p_out = cfg.p_out.average(n * dt, (n + 1) * dt);
    in.dt = dt;
    in.eps = cfg.eps;
    in.alpha = cfg.alpha;
    in.nu = cfg.nu;
    in.slip = cfg.slip;
    in.div_rule = cfg.div_rule;

    IntervalResult fr;
    try {
      const IntervalContext ctx{model, wiener, static_cast<std::uint64_t>(n), amp};
      fr = solve_interval(ctx, in, tr.eta_star.back(), eta_star_next, n * dt, dw, 1, 0);
    } catch (const std::exception& e) {
      tr.failed = true;
      tr.failure = "step " + std::to_string(n) + ": " + e.what();
      break;
    }

    StepStates ss{u, fr.u, s.eta, s.v, half.eta, half.v, fr.v};
    const double quad = amp * amp * dw.dot(model.noise().gram() * dw);
    LedgerRow row = ledger_step(model.fluid(), ss, *star, *star_next, fr.budget, in.force, quad,
                                dt, cfg.eps);
    row.picard_iterations = fr.iterations;
    row.picard_residual = fr.residual;
    row.substeps = fr.leaves;

    tr.ledger.push_back(row);
    tr.increments.push_back(dw);
    tr.amplitudes.push_back(amp);
    tr.v_half.push_back(half.v);
    tr.u.push_back(fr.u);
    tr.v.push_back(fr.v);
    tr.eta.push_back(half.eta);
    tr.eta_star.push_back(eta_star_next);
    tr.star_index.push_back(star_idx);
    tr.theta.push_back(theta ? 1 : 0);
    tr.bounds.push_back(gb);

    s = {half.eta, fr.v};
    u = fr.u;
    star = star_next;
  }
  tr.stopping_step = detect_stopping_time(tr, cfg.delta1, cfg.delta2);
  return tr;
}

TrajectoryRecord run_path(const SchemeConfig& cfg, std::uint64_t seed) {
  const SchemeModel model(cfg);
  return run_path(model, seed);
}

std::vector<TrajectoryRecord> run_ensemble(const SchemeModel& model, std::uint64_t seed_base,
                                           int paths, int threads) {
  if (paths < 0) throw ConfigurationError("paths must be >= 0");
  std::vector<TrajectoryRecord> out(paths);
  const int workers = std::clamp(threads, 1, std::max(1, paths));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (int i = next++; i < paths; i = next++) {
          try {
            out[i] = run_path(model, seed_base + static_cast<std::uint64_t>(i));
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
  return out;
}

Interpolants::Interpolants(const TrajectoryRecord& traj)
    : traj_(&traj), dt_(traj.dt), steps_(traj.steps()) {
  if (steps_ < 1) throw ConfigurationError("interpolants need at least one completed step");
}

namespace {

// t / dt, snapped to the grid when round-off puts it next to a grid point
double grid_coordinate(double t, double dt) {
  const double s = t / dt;
  const double r = std::round(s);
  return std::abs(s - r) <= 1e-9 * std::max(1.0, std::abs(r)) ? r : s;
}

}  // namespace

int Interpolants::left_index(double t) const {
  return std::clamp(static_cast<int>(std::floor(grid_coordinate(t, dt_))), 0, steps_ - 1);
}

int Interpolants::right_index(double t) const {
  return std::clamp(static_cast<int>(std::ceil(grid_coordinate(t, dt_))) - 1, 0, steps_ - 1);
}

template <class T>
T Interpolants::lerp(const std::vector<T>& a, double t) const {
  const int n = left_index(t);
  const double th = grid_coordinate(t, dt_) - n;
  if (th == 0.0) return a[n];
  if (th == 1.0) return a[n + 1];
  return (1.0 - th) * a[n] + th * a[n + 1];
}

NodalField Interpolants::u(double t) const { return traj_->u[left_index(t)]; }
BeamCoeffs Interpolants::eta(double t) const { return traj_->eta[left_index(t)]; }
BeamCoeffs Interpolants::eta_star(double t) const { return traj_->eta_star[left_index(t)]; }
BeamCoeffs Interpolants::v(double t) const { return traj_->v[left_index(t)]; }
BeamCoeffs Interpolants::v_sharp(double t) const { return traj_->v_half[left_index(t)]; }
NodalField Interpolants::u_plus(double t) const { return traj_->u[right_index(t) + 1]; }
BeamCoeffs Interpolants::eta_plus(double t) const { return traj_->eta[right_index(t) + 1]; }
BeamCoeffs Interpolants::v_plus(double t) const { return traj_->v[right_index(t) + 1]; }
NodalField Interpolants::u_lin(double t) const { return lerp(traj_->u, t); }
BeamCoeffs Interpolants::eta_lin(double t) const { return lerp(traj_->eta, t); }
BeamCoeffs Interpolants::eta_star_lin(double t) const { return lerp(traj_->eta_star, t); }
BeamCoeffs Interpolants::v_lin(double t) const { return lerp(traj_->v, t); }
BeamCoeffs Interpolants::eta_lin_rate(double t) const {
  const int n = left_index(t);
  return (traj_->eta[n + 1] - traj_->eta[n]) / dt_;
}

}  // namespace stochfsi
