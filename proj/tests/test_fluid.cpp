#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "stochfsi/fluid.hpp"
#include "test_util.hpp"

using namespace stochfsi;
using testutil::SineWall;

namespace {

struct Fixture {
  MeshPtr mesh;
  std::shared_ptr<const InterfaceQuadrature> iq;
  std::shared_ptr<const ElasticOperator> op;
  HarmonicExtension ext;
  FluidSpace space;

  Fixture(int nz, int nr, int ne, double mass_scale = 1.0)
      : mesh(std::make_shared<const ReferenceMesh>(1.0, nz, nr)),
        iq(std::make_shared<const InterfaceQuadrature>(1.0, nz, ne)),
        op(make_op(ne, mass_scale)),
        ext(mesh, iq),
        space(mesh, iq, op) {}

  static std::shared_ptr<const ElasticOperator> make_op(int ne, double mass_scale) {
    ElasticOperator e = assemble_elastic(std::make_shared<const BeamSpace>(1.0, ne));
    e.mass *= mass_scale;
    return std::make_shared<const ElasticOperator>(std::move(e));
  }

  std::shared_ptr<const AleMap> map(const SineWall& w) const {
    return std::make_shared<const AleMap>(ext.extend(w.trace(*mesh, *iq)));
  }
  std::shared_ptr<const AleMap> identity() const { return map(SineWall{1.0, {0}, {0}}); }

  FluidStepInputs zero_inputs(double dt = 0.05) const {
    FluidStepInputs in;
    in.u_prev = NodalField::Zero(mesh->num_nodes(), 2);
    in.v_half = BeamCoeffs::Zero(space.num_beam(), 2);
    in.map_n = in.map_np1 = identity();
    in.w = NodalField::Zero(mesh->num_nodes(), 2);
    in.force = ForcingPair::zero(mesh->num_nodes(), space.num_beam());
    in.dt = dt;
    in.eps = 0.01;
    in.alpha = 1.0;
    in.nu = 0.1;
    return in;
  }

  FluidStepInputs random_inputs(std::mt19937_64& rng, double amp, bool noise, double dt = 0.02) const {
    FluidStepInputs in = zero_inputs(dt);
    std::normal_distribution<double> g;
    in.u_prev = space.constrain(amp * testutil::random_field(rng, mesh->num_nodes()));
    for (int j = 0; j < space.num_beam(); ++j) in.v_half.row(j) << amp * g(rng), amp * g(rng);
    in.map_n = map(testutil::random_wall(rng, 0.05));
    in.map_np1 = map(testutil::random_wall(rng, 0.05));
    in.w = ale_velocity(*in.map_n, *in.map_np1, dt);
    if (noise) {
      in.force.fluid = fluid_load(*mesh, std::sqrt(dt) * testutil::random_field(rng, mesh->num_nodes()));
      for (int j = 0; j < space.num_beam(); ++j)
        in.force.structure.row(j) << std::sqrt(dt) * g(rng) * 0.1, std::sqrt(dt) * g(rng) * 0.1;
    }
    in.p_in = 0.3;
    in.p_out = -0.1;
    return in;
  }
};

Eigen::MatrixXd dense(const Eigen::SparseMatrix<double>& a) { return Eigen::MatrixXd(a); }

/// Signed permutation realizing z -> L - z on the unknown vector.
Eigen::MatrixXd reflection(const FluidSpace& s) {
  const ReferenceMesh& m = s.mesh();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(s.size(), s.size());
  for (int n = 0; n < m.num_nodes(); ++n)
    for (int c = 0; c < 2; ++c) {
      const int d = s.fluid_dof(n, c);
      if (d < 0) continue;
      const int d2 = s.fluid_dof(m.node(m.nz() - m.node_i(n), m.node_j(n)), c);
      p(d2, d) = c == 0 ? -1.0 : 1.0;
    }
  const int ne = s.beam().elements();
  for (int j = 0; j < s.num_beam(); ++j) {
    const int node = j / 2 + 1, type = j % 2;
    const int j2 = 2 * (ne - node - 1) + type;
    for (int c = 0; c < 2; ++c)
      p(s.beam_dof(j2, c), s.beam_dof(j, c)) = (type == 1 ? -1.0 : 1.0) * (c == 0 ? -1.0 : 1.0);
  }
  return p;
}

}  // namespace

TEST_SUITE("fluid") {

TEST_CASE("trilinear form is skew") {
  std::mt19937_64 rng(51);
  Fixture f(6, 5, 6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto map = f.map(testutil::random_wall(rng, 0.1));
    const NodalField a = testutil::random_field(rng, f.mesh->num_nodes());
    const NodalField w = testutil::random_field(rng, f.mesh->num_nodes());
    const NodalField u = testutil::random_field(rng, f.mesh->num_nodes());
    const NodalField q = testutil::random_field(rng, f.mesh->num_nodes());
    CHECK(std::abs(trilinear_b(*map, a, w, u, u)) < 1e-12);
    CHECK(trilinear_b(*map, a, w, u, q) == doctest::Approx(-trilinear_b(*map, a, w, q, u)).epsilon(1e-12));
  }
}

TEST_CASE("trilinear form on simple fields") {
  Fixture f(4, 4, 4);
  const auto id = f.identity();
  const NodalField zero = NodalField::Zero(f.mesh->num_nodes(), 2);
  const NodalField c1 = f.mesh->interpolate([](const Vec2&) { return Vec2(1.0, 2.0); });
  const NodalField c2 = f.mesh->interpolate([](const Vec2&) { return Vec2(-0.5, 3.0); });
  CHECK(std::abs(trilinear_b(*id, c1, zero, c2, c1)) < 1e-14);
  // a = e_z, u = (z r, 0), q = (r, 0): 1/2 int r^2 = L / 6
  const NodalField ez = f.mesh->interpolate([](const Vec2&) { return Vec2(1.0, 0.0); });
  const NodalField u = f.mesh->interpolate([](const Vec2& x) { return Vec2(x.x() * x.y(), 0.0); });
  const NodalField q = f.mesh->interpolate([](const Vec2& x) { return Vec2(x.y(), 0.0); });
  CHECK(trilinear_b(*id, ez, zero, u, q) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
  // ALE velocity enters as u_adv - w
  CHECK(trilinear_b(*id, zero, -1.0 * ez, u, q) == doctest::Approx(1.0 / 6.0).epsilon(1e-13));
  // a = (1, 1), u = (z, r), q = (1, 0): 1/2 int (a.grad u).q - (a.grad q).u = 1/2 int 1
  const NodalField a = f.mesh->interpolate([](const Vec2&) { return Vec2(1.0, 1.0); });
  const NodalField lin = f.mesh->interpolate([](const Vec2& x) { return x; });
  CHECK(trilinear_b(*id, a, zero, lin, ez) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("advection block is antisymmetric") {
  std::mt19937_64 rng(53);
  Fixture f(5, 4, 5);
  const FluidStepInputs in = f.random_inputs(rng, 1.0, false);
  const Eigen::MatrixXd a = dense(assemble_advection(f.space, in, testutil::random_field(rng, f.mesh->num_nodes())));
  CHECK((a + a.transpose()).cwiseAbs().maxCoeff() < 1e-13 * std::max(1.0, a.cwiseAbs().maxCoeff()));
}

TEST_CASE("zero inputs") {
  Fixture f(4, 4, 4);
  const FluidStepInputs in = f.zero_inputs();
  const FluidOperatorParts p = assemble_fluid_parts(f.space, in);
  CHECK(p.rhs().norm() == 0.0);
  const FluidStepResult r = fluid_substep(f.space, in);
  CHECK(r.u.norm() == 0.0);
  CHECK(r.v.norm() == 0.0);
  CHECK(r.report.iterations == 1);
  CHECK(fluid_energy_identity_residual(f.space, in, r) == 0.0);
}

TEST_CASE("rhs on identity maps is the mass pairing") {
  std::mt19937_64 rng(55);
  Fixture f(4, 4, 4);
  FluidStepInputs in = f.zero_inputs();
  in.u_prev = f.space.constrain(testutil::random_field(rng, f.mesh->num_nodes()));
  in.v_half = BeamCoeffs::Random(f.space.num_beam(), 2);
  const FluidOperatorParts p = assemble_fluid_parts(f.space, in);
  CHECK(p.rhs_pressure.norm() == 0.0);
  CHECK(p.rhs_noise.norm() == 0.0);
  const Eigen::VectorXd x = f.space.pack(in.u_prev, in.v_half);
  CHECK((p.rhs() - p.mass * x).norm() < 1e-13 * p.rhs().norm());
}

TEST_CASE("penalties add blockwise with weight 1/eps") {
  std::mt19937_64 rng(57);
  Fixture f(4, 4, 4);
  FluidStepInputs in = f.random_inputs(rng, 0.5, true);
  const NodalField adv = testutil::random_field(rng, f.mesh->num_nodes());
  in.eps = 1e-2;
  const FluidSystem s1 = assemble_fluid_system(f.space, in, adv);
  const FluidOperatorParts p = assemble_fluid_parts(f.space, in);
  in.eps = 1e6;
  const FluidSystem s2 = assemble_fluid_system(f.space, in, adv);
  const Eigen::MatrixXd expect = (1.0 / 1e-2 - 1.0 / 1e6) * dense(p.div_penalty + p.normal_penalty);
  CHECK((dense(s1.matrix) - dense(s2.matrix) - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((s1.rhs - s2.rhs).norm() == 0.0);
  const Eigen::MatrixXd unpen = dense(p.mass + p.viscous + p.slip + assemble_advection(f.space, in, adv));
  CHECK((dense(s1.matrix) - unpen - 100.0 * dense(p.div_penalty + p.normal_penalty)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("divergence penalty quadrature rules") {
  std::mt19937_64 rng(58);
  Fixture f(6, 5, 4);
  FluidStepInputs in = f.random_inputs(rng, 0.5, false);
  const NodalField u = f.space.constrain(testutil::random_field(rng, f.mesh->num_nodes()));
  const Eigen::VectorXd x = f.space.pack(u, BeamCoeffs::Zero(f.space.num_beam(), 2));
  const PointwiseField pu = nodal_field(f.mesh, u);
  const ReferenceMesh& m = *f.mesh;
  double centroid = 0.0, gauss = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    const double d = transformed_divergence_at(pu, *in.map_n, {c, 0.5, 0.5});
    centroid += in.dt * m.hz() * m.hr() * d * d;
  }
  for (int q = 0; q < m.num_quad(); ++q) {
    const double d = transformed_divergence_at(pu, *in.map_n, m.quad_point(q));
    gauss += in.dt * m.quad_weight() * d * d;
  }
  in.div_rule = DivQuadrature::Centroid;
  const double qc = x.dot(assemble_fluid_parts(f.space, in).div_penalty * x);
  in.div_rule = DivQuadrature::Gauss;
  const double qg = x.dot(assemble_fluid_parts(f.space, in).div_penalty * x);
  CHECK(qc == doctest::Approx(centroid).epsilon(1e-12));
  CHECK(qg == doctest::Approx(gauss).epsilon(1e-12));
}

TEST_CASE("penalty and slip blocks are positive semidefinite") {
  std::mt19937_64 rng(59);
  Fixture f(4, 4, 4);
  for (auto slip : {SlipProjection::Full, SlipProjection::Tangential}) {
    FluidStepInputs in = f.random_inputs(rng, 0.5, false);
    in.slip = slip;
    const FluidOperatorParts p = assemble_fluid_parts(f.space, in);
    for (const auto* m : {&p.div_penalty, &p.normal_penalty, &p.slip, &p.viscous, &p.mass}) {
      const Eigen::MatrixXd d = dense(*m);
      CHECK((d - d.transpose()).cwiseAbs().maxCoeff() < 1e-14 * std::max(1.0, d.cwiseAbs().maxCoeff()));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d);
      CHECK(es.eigenvalues().minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("system commutes with the reflection z -> L - z") {
  std::mt19937_64 rng(61);
  Fixture f(4, 4, 4);
  const Eigen::MatrixXd p = reflection(f.space);
  CHECK((p * p - Eigen::MatrixXd::Identity(p.rows(), p.cols())).norm() == 0.0);
  FluidStepInputs in = f.zero_inputs();
  in.p_in = in.p_out = 0.3;
  // symmetric advecting field
  NodalField adv = f.space.constrain(testutil::random_field(rng, f.mesh->num_nodes()));
  BeamCoeffs zv = BeamCoeffs::Zero(f.space.num_beam(), 2);
  Eigen::VectorXd xa = f.space.pack(adv, zv);
  xa = 0.5 * (xa + p * xa);
  f.space.unpack(xa, adv, zv);
  in.u_prev = adv;
  const FluidSystem s = assemble_fluid_system(f.space, in, adv);
  const Eigen::MatrixXd a = dense(s.matrix);
  CHECK((p * a * p.transpose() - a).cwiseAbs().maxCoeff() < 1e-12 * a.cwiseAbs().maxCoeff());
  CHECK((p * s.rhs - s.rhs).cwiseAbs().maxCoeff() < 1e-13);
  for (auto slip : {SlipProjection::Full, SlipProjection::Tangential}) {
    // symmetric wall: eta_z odd, eta_r even about L/2
    in.slip = slip;
    in.map_n = f.map(SineWall{1.0, {0.0, 0.03}, {0.05, 0.0, 0.02}});
    in.map_np1 = f.map(SineWall{1.0, {0.0, -0.02}, {0.04, 0.0, 0.01}});
    in.w = ale_velocity(*in.map_n, *in.map_np1, in.dt);
    const Eigen::MatrixXd b = dense(assemble_fluid_system(f.space, in, adv).matrix);
    CHECK((p * b * p.transpose() - b).cwiseAbs().maxCoeff() < 1e-11 * b.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("manufactured solution is recovered") {
  std::mt19937_64 rng(63);
  Fixture f(6, 6, 6);
  FluidStepInputs in = f.random_inputs(rng, 0.2, false);
  const NodalField us = f.space.constrain(0.5 * testutil::random_field(rng, f.mesh->num_nodes()));
  const BeamCoeffs vs = 0.3 * BeamCoeffs::Random(f.space.num_beam(), 2);
  const Eigen::VectorXd xs = f.space.pack(us, vs);
  const FluidSystem sys = assemble_fluid_system(f.space, in, us);
  const Eigen::VectorXd r = sys.matrix * xs - sys.rhs;
  NodalField uf = NodalField::Zero(f.mesh->num_nodes(), 2);
  BeamCoeffs vf;
  f.space.unpack(r, uf, vf);
  in.force.fluid = uf;
  in.force.structure = vf;
  const FluidStepResult out = fluid_substep(f.space, in, 1e-12, 100);
  CHECK((f.space.pack(out.u, out.v) - xs).norm() < 1e-9 * xs.norm());
}

TEST_CASE("converged steps satisfy the energy identity") {
  std::mt19937_64 rng(65);
  Fixture f(8, 8, 8);
  for (auto slip : {SlipProjection::Full, SlipProjection::Tangential})
    for (int trial = 0; trial < 4; ++trial) {
      FluidStepInputs in = f.random_inputs(rng, 1.0, true);
      in.slip = slip;
      in.div_rule = trial % 2 ? DivQuadrature::Gauss : DivQuadrature::Centroid;
      const double tol = 1e-10;
      const FluidStepResult out = fluid_substep(f.space, in, tol);
      CHECK(out.report.residual < tol);
      const FluidBudget b = fluid_budget(f.space, in, out.u, out.v);
      const double scale = std::max(b.kinetic_half, 1.0);
      CHECK(b.residual() <= 10.0 * tol * scale);
      CHECK(fluid_energy_identity_residual(f.space, in, out) == b.residual());
      // boundary conditions of the fluid space
      for (int n = 0; n < f.mesh->num_nodes(); ++n)
        if (f.mesh->on_inlet(n) || f.mesh->on_outlet(n) || f.mesh->on_bottom(n))
          CHECK(out.u(n, 1) == 0.0);
    }
}

TEST_CASE("unforced steps are dissipative") {
  std::mt19937_64 rng(67);
  Fixture f(8, 8, 8);
  for (int trial = 0; trial < 6; ++trial) {
    FluidStepInputs in = f.random_inputs(rng, 1.0, false);
    in.p_in = in.p_out = 0.0;
    const FluidStepResult out = fluid_substep(f.space, in);
    const FluidBudget b = fluid_budget(f.space, in, out.u, out.v);
    CHECK(b.kinetic_new <= b.kinetic_half);
    CHECK(b.d2() >= 0.0);
    CHECK(b.c2 >= 0.0);
  }
}

TEST_CASE("noise-only budget is a pure mass identity") {
  // identity maps, zero data and a tiny step: only the mass and forcing terms matter
  std::mt19937_64 rng(69);
  Fixture f(4, 4, 4);
  FluidStepInputs in = f.zero_inputs(1e-8);
  in.force.fluid = fluid_load(*f.mesh, testutil::random_field(rng, f.mesh->num_nodes()));
  in.force.structure = BeamCoeffs::Random(f.space.num_beam(), 2);
  const FluidStepResult out = fluid_substep(f.space, in);
  const FluidBudget b = fluid_budget(f.space, in, out.u, out.v);
  CHECK(b.residual() <= 1e-12 * std::max(1.0, b.kinetic_new));
  // a(a - b) = 1/2 (a^2 - b^2 + (a - b)^2) with b = 0
  CHECK(b.c2 == doctest::Approx(0.5 * b.kinetic_new).epsilon(1e-12));
}

TEST_CASE("invalid inputs are rejected") {
  Fixture f(4, 4, 4);
  FluidStepInputs in = f.zero_inputs();
  in.eps = 0.0;
  CHECK_THROWS_AS(fluid_substep(f.space, in), ConfigurationError);
  in = f.zero_inputs();
  in.nu = -1.0;
  CHECK_THROWS_AS(fluid_substep(f.space, in), ConfigurationError);
  in = f.zero_inputs();
  in.map_np1 = f.map(SineWall{1.0, {0.0}, {-1.6}});
  CHECK_THROWS_AS(fluid_substep(f.space, in), GeometryError);
  in = f.zero_inputs();
  in.u_prev = NodalField::Zero(3, 2);
  CHECK_THROWS_AS(fluid_substep(f.space, in), ConfigurationError);
}

TEST_CASE("picard failure carries the last iterate") {
  std::mt19937_64 rng(71);
  Fixture f(6, 6, 6);
  FluidStepInputs in = f.random_inputs(rng, 50.0, false, 0.5);
  in.nu = 1e-3;
  try {
    fluid_substep(f.space, in, 1e-14, 2);
    FAIL("expected a step failure");
  } catch (const FluidStepFailure& e) {
    CHECK(e.last_iterate.report.iterations == 2);
    CHECK(e.last_iterate.u.rows() == f.mesh->num_nodes());
  }
}

TEST_CASE("forcing dual norms match a dense solve") {
  std::mt19937_64 rng(73);
  Fixture f(4, 4, 4);
  const auto map = f.map(testutil::random_wall(rng, 0.05));
  ForcingPair fp{fluid_load(*f.mesh, testutil::random_field(rng, f.mesh->num_nodes())),
                 BeamCoeffs::Random(f.space.num_beam(), 2)};
  const auto [df, ds] = forcing_dual_norms(f.space, *map, fp);
  // dense J-weighted mass on free dofs
  Eigen::MatrixXd mj = Eigen::MatrixXd::Zero(f.space.num_fluid(), f.space.num_fluid());
  const ReferenceMesh& m = *f.mesh;
  for (int q = 0; q < m.num_quad(); ++q) {
    const CellPoint cp = m.quad_point(q);
    const CellBasis b = m.basis(cp.xi, cp.zeta);
    const auto nodes = m.cell_nodes(cp.cell);
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 4; ++c)
        for (int k = 0; k < 2; ++k) {
          const int i = f.space.fluid_dof(nodes[a], k), j = f.space.fluid_dof(nodes[c], k);
          if (i >= 0 && j >= 0) mj(i, j) += m.quad_weight() * map->jacobian()[q] * b.value[a] * b.value[c];
        }
  }
  Eigen::VectorXd bf = Eigen::VectorXd::Zero(f.space.num_fluid());
  for (int n = 0; n < m.num_nodes(); ++n)
    for (int k = 0; k < 2; ++k)
      if (int d = f.space.fluid_dof(n, k); d >= 0) bf(d) = fp.fluid(n, k);
  CHECK(df == doctest::Approx(bf.dot(mj.ldlt().solve(bf))).epsilon(1e-10));
  const Eigen::MatrixXd bm = dense(f.op->mass);
  const double ref = (fp.structure.transpose() * bm.ldlt().solve(fp.structure)).trace();
  CHECK(ds == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("pressure-driven flow reaches a mesh-converged steady profile") {
  // Heavy wall: the structure velocity stays ~0 so the wall acts as a Navier-slip boundary.
  // dt/eps = 1000 puts the round-off floor of the relative residual near 1e-10.
  auto solve = [](int n) {
    Fixture f(n, n, n, 1e6);
    FluidStepInputs in = f.zero_inputs(1.0);
    in.nu = 1.0;
    in.eps = 1e-3;
    in.p_in = 1.0;
    in.p_out = 0.0;
    NodalField u = in.u_prev;
    for (int step = 0; step < 200; ++step) {
      in.u_prev = u;
      in.v_half.setZero();
      const FluidStepResult r = fluid_substep(f.space, in, 1e-8, 50);
      const double change = f.mesh->norm(r.u - u);
      u = r.u;
      if (change < 1e-11 * std::max(1.0, f.mesh->norm(u))) break;
    }
    return std::make_pair(f.mesh, u);
  };
  const auto [mc, uc] = solve(8);
  const auto [mf, uf] = solve(32);
  double diff = 0.0, ref = 0.0;
  for (int q = 0; q < mf->num_quad(); ++q) {
    const CellPoint p = mf->quad_point(q);
    const Vec2 x = mf->physical(p);
    const Vec2 fine = mf->evaluate(uf, p).value;
    const Vec2 coarse = mc->evaluate(uc, mc->locate(x)).value;
    diff += mf->quad_weight() * (fine - coarse).squaredNorm();
    ref += mf->quad_weight() * fine.squaredNorm();
  }
  CHECK(ref > 0.0);
  CHECK(std::sqrt(diff / ref) <= 0.02);
  // axial flow from high to low pressure
  CHECK(mf->evaluate(uf, mf->locate(Vec2(0.5, 0.5))).value.x() > 0.0);
}

}  // TEST_SUITE
