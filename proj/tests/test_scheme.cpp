#include <doctest.h>

#include <cmath>
#include <cstring>

#include "stochfsi/quadrature.hpp"
#include "stochfsi/scheme.hpp"

using namespace stochfsi;

namespace {

SchemeConfig small_config() {
  SchemeConfig c;
  c.T = 0.1;
  c.N = 8;
  c.eps = 0.01;
  c.delta1 = 0.1;
  c.delta2 = 0.01;
  c.nz = c.nr = 6;
  c.beam_elements = 8;
  c.noise = true;
  c.noise_gain = 0.5;
  c.u0_amp = 0.5;
  c.eta0_amp = 0.02;
  c.v0_amp = 0.1;
  c.p_in = {WaveShape::Pulse, 1.0, 0.1};
  return c;
}

GeometryBounds ok_bounds() { return {}; }

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_rows(const LedgerRow& a, const LedgerRow& b) {
  const double xa[] = {a.e_n, a.e_half, a.e_np1, a.d1, a.c1, a.d2_viscous, a.d2_slip, a.d2_div,
                       a.d2_normal, a.c2, a.pressure_work, a.stochastic_work, a.stochastic_new,
                       a.noise_quadratic, a.forcing_dual, a.v_jump_sq, a.picard_residual};
  const double xb[] = {b.e_n, b.e_half, b.e_np1, b.d1, b.c1, b.d2_viscous, b.d2_slip, b.d2_div,
                       b.d2_normal, b.c2, b.pressure_work, b.stochastic_work, b.stochastic_new,
                       b.noise_quadratic, b.forcing_dual, b.v_jump_sq, b.picard_residual};
  for (std::size_t i = 0; i < std::size(xa); ++i)
    if (!same_bits(xa[i], xb[i])) return false;
  return a.picard_iterations == b.picard_iterations && a.substeps == b.substeps;
}

bool same_paths(const TrajectoryRecord& a, const TrajectoryRecord& b) {
  if (a.steps() != b.steps() || a.failed != b.failed || a.stopping_step != b.stopping_step)
    return false;
  for (int n = 0; n < a.steps(); ++n)
    if (!same_rows(a.ledger[n], b.ledger[n]) || a.u[n + 1] != b.u[n + 1] || a.v[n + 1] != b.v[n + 1] ||
        a.eta[n + 1] != b.eta[n + 1] || a.increments[n] != b.increments[n])
      return false;
  return true;
}

/// L2(0,T; L2(O)) distance of the linear interpolants of two paths on the same mesh.
double l2_time_distance(const ReferenceMesh& m, const TrajectoryRecord& a, const TrajectoryRecord& b) {
  const Interpolants ia(a), ib(b);
  const GaussRule g = gauss_legendre(3);
  const int cells = std::max(a.steps(), b.steps());
  const double h = ia.final_time() / cells;
  double s = 0.0;
  for (int k = 0; k < cells; ++k)
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double t = (k + g.points[q]) * h;
      const double d = m.norm(ia.u_lin(t) - ib.u_lin(t));
      s += g.weights[q] * h * d * d;
    }
  return std::sqrt(s);
}

}  // namespace

TEST_SUITE("scheme") {

TEST_CASE("cut-off latch") {
  const double d1 = 0.2, d2 = 0.1;
  std::vector<GeometryBounds> h(8, ok_bounds());
  CHECK(compute_cutoff(h, d1, d2));
  h[3].j_min = d1 / 2;
  for (std::size_t n = 1; n <= h.size(); ++n) {
    const std::vector<GeometryBounds> prefix(h.begin(), h.begin() + n);
    CHECK(compute_cutoff(prefix, d1, d2) == (n <= 3));
  }
  h[3] = ok_bounds();
  h[5].eta_norm = 1.0 / d2;  // strict inequality
  CHECK_FALSE(compute_cutoff(h, d1, d2));
  h[5].eta_norm = std::nextafter(1.0 / d2, 0.0);
  CHECK(compute_cutoff(h, d1, d2));
  h[2].j_min = d1;
  CHECK_FALSE(compute_cutoff(h, d1, d2));
}

TEST_CASE("artificial displacement is the stopped process") {
  TrajectoryRecord tr;
  tr.N = 9;
  for (int k = 0; k <= 9; ++k) {
    tr.eta.push_back(BeamCoeffs::Constant(4, 2, k));
    tr.bounds.push_back(ok_bounds());
  }
  for (int n = 0; n <= 9; ++n) {
    CHECK(artificial_index(tr.bounds, n, 0.1, 0.1) == n);
    CHECK(update_artificial(tr, n, 0.1, 0.1) == tr.eta[n]);
  }
  CHECK(detect_stopping_time(tr, 0.1, 0.1) == 9);
  tr.bounds[5].j_min = -1.0;
  tr.bounds[6].j_min = 0.05;
  for (int n = 0; n <= 9; ++n) {
    CHECK(artificial_index(tr.bounds, n, 0.1, 0.1) == std::min(n, 4));
    CHECK(update_artificial(tr, n, 0.1, 0.1) == tr.eta[std::min(n, 4)]);
  }
  CHECK(detect_stopping_time(tr, 0.1, 0.1) == 5);
  // recovery after a trip does not reopen the latch
  tr.bounds[6] = ok_bounds();
  CHECK(artificial_index(tr.bounds, 9, 0.1, 0.1) == 4);
}

TEST_CASE("configuration invariants") {
  SchemeConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  auto bad = [&](auto mutate) {
    SchemeConfig b = small_config();
    mutate(b);
    CHECK_THROWS_AS(b.validate(), ConfigurationError);
  };
  bad([](SchemeConfig& b) { b.T = 0.0; });
  bad([](SchemeConfig& b) { b.N = 0; });
  bad([](SchemeConfig& b) { b.eps = 0.0; });
  bad([](SchemeConfig& b) { b.delta1 = 0.0; });
  bad([](SchemeConfig& b) { b.delta2 = -1.0; });
  bad([](SchemeConfig& b) { b.s_exp = 1.5; });
  bad([](SchemeConfig& b) { b.s_exp = 2.0; });
  bad([](SchemeConfig& b) { b.alpha = 0.0; });
  bad([](SchemeConfig& b) { b.nu = 0.0; });
  bad([](SchemeConfig& b) { b.nz = 1; });
  bad([](SchemeConfig& b) { b.c_b = 0.0; });
  bad([](SchemeConfig& b) { b.noise_gain = 2.0; });
}

TEST_CASE("pressure waveform averages") {
  const PressureWaveform c{WaveShape::Constant, 2.5, 1.0};
  CHECK(c.average(0.1, 0.3) == doctest::Approx(2.5));
  const PressureWaveform p{WaveShape::Pulse, 2.0, 0.5};
  // int_0^{0.5} 2 sin^2(2 pi t) dt = 0.5, composite over 20 steps
  double sum = 0.0;
  for (int k = 0; k < 20; ++k) sum += p.average(k * 0.025, (k + 1) * 0.025) * 0.025;
  CHECK(sum == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(p(0.25) == doctest::Approx(2.0));
  CHECK(p(0.75) == 0.0);
  // sin^2 is a trigonometric polynomial: 4-point Gauss on a short interval is essentially exact
  const double t0 = 0.1, t1 = 0.12;
  const double exact = (2.0 * (t1 - t0) / 2 - 2.0 * (std::sin(4 * M_PI * t1) - std::sin(4 * M_PI * t0)) / (8 * M_PI)) / (t1 - t0);
  CHECK(p.average(t0, t1) == doctest::Approx(exact).epsilon(1e-10));
}

TEST_CASE("zero data gives the zero trajectory") {
  for (bool noise : {false, true}) {
    SchemeConfig c = small_config();
    c.noise = noise;
    c.u0_amp = c.eta0_amp = c.v0_amp = 0.0;
    c.p_in = {};
    c.p_out = {};
    const TrajectoryRecord tr = run_path(c, 3);
    REQUIRE_FALSE(tr.failed);
    CHECK(tr.steps() == c.N);
    for (int n = 0; n <= c.N; ++n) {
      CHECK(tr.u[n].norm() == 0.0);
      CHECK(tr.v[n].norm() == 0.0);
      CHECK(tr.eta[n].norm() == 0.0);
    }
    for (const auto& r : tr.ledger) CHECK(r.e_np1 == 0.0);
    CHECK(tr.stopping_step == c.N);
  }
}

TEST_CASE("runs are deterministic") {
  const SchemeConfig c = small_config();
  const SchemeModel model(c);
  const TrajectoryRecord a = run_path(model, 42), b = run_path(model, 42), d = run_path(model, 43);
  CHECK(same_paths(a, b));
  CHECK_FALSE(same_paths(a, d));
  const auto e1 = run_ensemble(model, 100, 4, 1);
  const auto e3 = run_ensemble(model, 100, 4, 3);
  REQUIRE(e1.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(same_paths(e1[i], e3[i]));
    CHECK(e1[i].seed == 100u + i);
  }
}

TEST_CASE("splitting order and step identities") {
  const SchemeConfig c = small_config();
  const SchemeModel model(c);
  const TrajectoryRecord tr = run_path(model, 7);
  REQUIRE_FALSE(tr.failed);
  const double dt = c.dt();
  for (int n = 0; n < tr.steps(); ++n) {
    const StructureState half = model.stepper().step({tr.eta[n], tr.v[n]});
    CHECK(half.eta == tr.eta[n + 1]);
    CHECK(half.v == tr.v_half[n]);
    CHECK((tr.eta[n + 1] - tr.eta[n] - dt * tr.v_half[n]).cwiseAbs().maxCoeff() < 1e-15);
    const LedgerRow& r = tr.ledger[n];
    CHECK(verify_structure_identity(r) <= structure_tolerance(r));
    CHECK(verify_fluid_budget(r) <= fluid_tolerance(r, c.picard_tol));
    CHECK(r.energy2_lhs() <= r.energy2_rhs() + fluid_tolerance(r, c.picard_tol));
    // fluid noise uses G(u^n, eta^n_*)
    CHECK(tr.amplitudes[n] == model.noise().amplitude(tr.u[n], tr.eta_star[n]));
  }
  // no trip: the artificial displacement is the true one
  CHECK(tr.stopping_step == c.N);
  for (int n = 0; n <= c.N; ++n) CHECK(tr.eta_star[n] == tr.eta[n]);
}

TEST_CASE("latch trips at a prescribed step") {
  SchemeConfig c = small_config();
  c.eta0_amp = 0.0;
  c.v0_amp = 2.0;
  c.delta2 = 1e-6;
  const TrajectoryRecord free = run_path(c, 11);
  REQUIRE_FALSE(free.failed);
  REQUIRE(free.stopping_step == c.N);
  // threshold between the norms at steps k-1 and k
  const int k = 4;
  REQUIRE(free.bounds[k].eta_norm > free.bounds[k - 1].eta_norm);
  double lo = 0.0;
  for (int i = 0; i < k; ++i) lo = std::max(lo, free.bounds[i].eta_norm);
  REQUIRE(lo < free.bounds[k].eta_norm);
  c.delta2 = 1.0 / (0.5 * (lo + free.bounds[k].eta_norm));
  const TrajectoryRecord tr = run_path(c, 11);
  REQUIRE_FALSE(tr.failed);
  CHECK(tr.stopping_step == k);
  CHECK(detect_stopping_time(tr, c.delta1, c.delta2) == k);
  for (int n = 0; n <= c.N; ++n) {
    CHECK(tr.theta[n] == (n < k ? 1 : 0));
    CHECK(tr.star_index[n] == std::min(n, k - 1));
    CHECK(tr.eta_star[n] == tr.eta[std::min(n, k - 1)]);
    if (n < k) CHECK(tr.eta_star[n] == tr.eta[n]);
    CHECK(update_artificial(tr, n, c.delta1, c.delta2) == tr.eta_star[n]);
  }
  // identical up to the trip
  for (int n = 0; n < k; ++n) CHECK(tr.u[n] == free.u[n]);
  for (int n = 0; n < tr.steps(); ++n) {
    const LedgerRow& r = tr.ledger[n];
    CHECK(verify_fluid_budget(r) <= fluid_tolerance(r, c.picard_tol));
  }
}

TEST_CASE("non-compliant initial data is rejected") {
  SchemeConfig c = small_config();
  c.eta0_amp = 0.02;
  c.delta2 = 10.0;  // 1/delta2 = 0.1 is below the H^2_0 norm of eta_0
  CHECK_THROWS_AS(run_path(c, 1), ConfigurationError);
  c = small_config();
  c.eta0_amp = -0.5;
  c.delta1 = 0.9;
  CHECK_THROWS_AS(run_path(c, 1), ConfigurationError);
}

TEST_CASE("stopping step is positive for compliant data") {
  SchemeConfig c = small_config();
  c.N = 4;
  c.noise_gain = 1.0;
  const SchemeModel model(c);
  for (const auto& tr : run_ensemble(model, 500, 16, 2)) CHECK(tr.stopping_step >= 1);
}

TEST_CASE("interpolants") {
  const SchemeConfig c = small_config();
  const SchemeModel model(c);
  const TrajectoryRecord tr = run_path(model, 5);
  const Interpolants ip(tr);
  const double dt = c.dt();
  for (int n = 0; n < c.N; ++n) {
    const double t = n * dt;
    CHECK(ip.u_lin(t) == tr.u[n]);
    CHECK(ip.eta_lin(t) == tr.eta[n]);
    CHECK((ip.u_lin(t + 0.5 * dt) - 0.5 * (tr.u[n] + tr.u[n + 1])).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(ip.u(t + 0.3 * dt) == tr.u[n]);
    CHECK(ip.v_sharp(t + 0.3 * dt) == tr.v_half[n]);
    CHECK(ip.eta_star(t + 0.3 * dt) == tr.eta_star[n]);
    CHECK(ip.u_plus(t + 0.3 * dt) == tr.u[n + 1]);
    CHECK(ip.v_plus(t + dt) == tr.v[n + 1]);
    CHECK(ip.eta_plus(t + dt) == tr.eta[n + 1]);
    const BeamCoeffs rate = ip.eta_lin_rate(t + 0.5 * dt);
    CHECK((rate - tr.v_half[n]).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, tr.v_half[n].cwiseAbs().maxCoeff()));
  }
  CHECK(ip.u_lin(c.T) == tr.u[c.N]);
  // int_0^T |u_N - u~_N|^2 = sum |u^{n+1} - u^n|^2 dt / 3
  const ReferenceMesh& m = *model.mesh();
  const GaussRule g = gauss_legendre(3);
  double lhs = 0.0, rhs = 0.0;
  for (int n = 0; n < c.N; ++n) {
    for (std::size_t q = 0; q < g.points.size(); ++q) {
      const double t = (n + g.points[q]) * dt;
      const double d = m.norm(ip.u(t) - ip.u_lin(t));
      lhs += g.weights[q] * dt * d * d;
    }
    const double j = m.norm(tr.u[n + 1] - tr.u[n]);
    rhs += j * j * dt / 3.0;
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("time self-convergence with a pressure pulse") {
  SchemeConfig c = small_config();
  c.noise = false;
  c.T = 0.2;
  c.p_in = {WaveShape::Pulse, 2.0, 0.2};
  std::vector<TrajectoryRecord> runs;
  std::shared_ptr<const ReferenceMesh> mesh;
  for (int n : {8, 16, 32}) {
    c.N = n;
    const SchemeModel model(c);
    mesh = model.mesh();
    runs.push_back(run_path(model, 1));
    REQUIRE_FALSE(runs.back().failed);
  }
  const double e1 = l2_time_distance(*mesh, runs[0], runs[1]);
  const double e2 = l2_time_distance(*mesh, runs[1], runs[2]);
  MESSAGE("self-convergence distances " << e1 << " " << e2);
  CHECK(e1 > 0.0);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.35));
}

TEST_CASE("halving keeps the budgets") {
  SchemeConfig c = small_config();
  c.u0_amp = 3.0;
  c.nu = 0.01;
  c.max_halvings = 4;
  bool found = false;
  for (int mp = 2; mp <= 8 && !found; ++mp) {
    c.max_picard = mp;
    const TrajectoryRecord tr = run_path(c, 9);
    if (tr.failed) continue;
    for (const auto& r : tr.ledger)
      if (r.substeps > 1) {
        found = true;
        CHECK(verify_structure_identity(r) <= structure_tolerance(r));
        CHECK(verify_fluid_budget(r) <= fluid_tolerance(r, c.picard_tol));
        CHECK(r.picard_residual < c.picard_tol);
      }
  }
  CHECK(found);
  // no retries allowed: the path stops and is flagged
  c.max_picard = 1;
  c.max_halvings = 0;
  const TrajectoryRecord tr = run_path(c, 9);
  CHECK(tr.failed);
  CHECK(tr.steps() < c.N);
  CHECK(tr.u.size() == static_cast<std::size_t>(tr.steps() + 1));
  CHECK_FALSE(tr.failure.empty());
}

}  // TEST_SUITE
