#include "stochfsi/fluid.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <cmath>
#include <cstdio>

namespace stochfsi {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Local values at one volume quadrature point.
struct PointBasis {
  std::array<int, 4> nodes;
  std::array<double, 4> n;
  std::array<Vec2, 4> g;  // transformed gradients (grad A)^{-T} grad N_a
};

PointBasis point_basis(const ReferenceMesh& m, const AleMap& map, int q) {
  PointBasis pb;
  pb.nodes = m.cell_nodes(q / ReferenceMesh::kQuadPerCell);
  const CellBasis& b = m.quad_basis(q % ReferenceMesh::kQuadPerCell);
  const Mat2& finv = map.inv_grad()[q];
  for (int a = 0; a < 4; ++a) {
    pb.n[a] = b.value[a];
    pb.g[a] = finv.transpose() * b.grad[a];
  }
  return pb;
}

PointBasis centre_basis(const ReferenceMesh& m, const AleMap& map, int cell) {
  PointBasis pb;
  pb.nodes = m.cell_nodes(cell);
  const CellBasis b = m.basis(0.5, 0.5);
  const Mat2 finv = map.sample({cell, 0.5, 0.5}).grad.inverse();
  for (int a = 0; a < 4; ++a) {
    pb.n[a] = b.value[a];
    pb.g[a] = finv.transpose() * b.grad[a];
  }
  return pb;
}

Vec2 value_at(const NodalField& f, const PointBasis& pb) {
  Vec2 v = Vec2::Zero();
  for (int a = 0; a < 4; ++a) v += pb.n[a] * f.row(pb.nodes[a]).transpose();
  return v;
}

// grad^eta f with (i, j) = d f_i / d x_j
Mat2 tgrad_at(const NodalField& f, const PointBasis& pb) {
  Mat2 g = Mat2::Zero();
  for (int a = 0; a < 4; ++a) g += f.row(pb.nodes[a]).transpose() * pb.g[a].transpose();
  return g;
}

// Sparse rows for the components of (u - v) at an interface point; the fluid
// part is filled here, the beam part by full_trace.
struct TraceRows {
  std::array<std::vector<std::pair<int, double>>, 2> comp;
};

TraceRows trace_rows(const FluidSpace& s, int q) {
  const ReferenceMesh& m = s.mesh();
  const int e = s.iface().edge(q);
  const double xi = s.iface().edge_xi(q);
  const int n0 = m.gamma_node(e), n1 = m.gamma_node(e + 1);
  TraceRows tr;
  for (int c = 0; c < 2; ++c) {
    if (int d = s.fluid_dof(n0, c); d >= 0 && xi < 1.0) tr.comp[c].emplace_back(d, 1.0 - xi);
    if (int d = s.fluid_dof(n1, c); d >= 0 && xi > 0.0) tr.comp[c].emplace_back(d, xi);
  }
  return tr;
}

void add_outer(Triplets& t, const std::vector<std::pair<int, double>>& a,
               const std::vector<std::pair<int, double>>& b, double w) {
  for (const auto& [i, ai] : a)
    for (const auto& [j, bj] : b) t.emplace_back(i, j, w * ai * bj);
}

std::vector<std::pair<int, double>> combine(const TraceRows& tr, const Vec2& dir) {
  std::vector<std::pair<int, double>> out;
  for (int c = 0; c < 2; ++c)
    for (const auto& [i, v] : tr.comp[c]) out.emplace_back(i, dir(c) * v);
  return out;
}

Eigen::SparseMatrix<double> to_matrix(int n, const Triplets& t) {
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

double pressure_weight(const ReferenceMesh& m, int j) {
  return (j == 0 || j == m.nr()) ? 0.5 * m.hr() : m.hr();
}

}  // namespace

FluidSpace::FluidSpace(MeshPtr mesh, std::shared_ptr<const InterfaceQuadrature> iface,
                       std::shared_ptr<const ElasticOperator> op)
    : mesh_(std::move(mesh)), iface_(std::move(iface)), op_(std::move(op)) {
  const ReferenceMesh& m = *mesh_;
  fluid_dof_.assign(2 * m.num_nodes(), -1);
  for (int n = 0; n < m.num_nodes(); ++n)
    for (int c = 0; c < 2; ++c) {
      const bool fixed = c == 1 && (m.on_inlet(n) || m.on_outlet(n) || m.on_bottom(n));
      if (!fixed) fluid_dof_[2 * n + c] = num_fluid_++;
    }
  std::vector<double> z(iface_->size());
  for (int q = 0; q < iface_->size(); ++q) z[q] = iface_->z(q);
  beam_trace_ = op_->space->evaluation_matrix(z, 0);
}

Eigen::VectorXd FluidSpace::pack(const NodalField& u, const BeamCoeffs& v) const {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(size());
  for (int n = 0; n < mesh_->num_nodes(); ++n)
    for (int c = 0; c < 2; ++c)
      if (int d = fluid_dof(n, c); d >= 0) x(d) = u(n, c);
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < num_beam(); ++j) x(beam_dof(j, c)) = v(j, c);
  return x;
}

void FluidSpace::unpack(const Eigen::VectorXd& x, NodalField& u, BeamCoeffs& v) const {
  u = NodalField::Zero(mesh_->num_nodes(), 2);
  v.resize(num_beam(), 2);
  for (int n = 0; n < mesh_->num_nodes(); ++n)
    for (int c = 0; c < 2; ++c)
      if (int d = fluid_dof(n, c); d >= 0) u(n, c) = x(d);
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < num_beam(); ++j) v(j, c) = x(beam_dof(j, c));
}

NodalField FluidSpace::constrain(NodalField u) const {
  for (int n = 0; n < mesh_->num_nodes(); ++n)
    for (int c = 0; c < 2; ++c)
      if (constrained(n, c)) u(n, c) = 0.0;
  return u;
}

void validate(const FluidSpace& space, const FluidStepInputs& in) {
  if (!(in.dt > 0.0) || !(in.eps > 0.0) || !(in.alpha > 0.0) || !(in.nu > 0.0))
    throw ConfigurationError("fluid step: dt, eps, alpha, nu must be positive");
  if (!in.map_n || !in.map_np1) throw ConfigurationError("fluid step: maps missing");
  in.map_n->require_injective();
  in.map_np1->require_injective();
  const int nn = space.mesh().num_nodes();
  if (in.u_prev.rows() != nn || in.w.rows() != nn || in.force.fluid.rows() != nn)
    throw ConfigurationError("fluid step: nodal field size mismatch");
  if (in.v_half.rows() != space.num_beam() || in.force.structure.rows() != space.num_beam())
    throw ConfigurationError("fluid step: structure field size mismatch");
}

// Rows of beam_trace are needed per interface point; precompute a row-major view.
namespace {
std::vector<std::vector<std::pair<int, double>>> beam_rows(const FluidSpace& s) {
  std::vector<std::vector<std::pair<int, double>>> rows(s.iface().size());
  const auto& bt = s.beam_trace();
  for (int k = 0; k < bt.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(bt, k); it; ++it)
      rows[it.row()].emplace_back(static_cast<int>(it.col()), it.value());
  return rows;
}

TraceRows full_trace(const FluidSpace& s, int q,
                     const std::vector<std::vector<std::pair<int, double>>>& brows) {
  TraceRows tr = trace_rows(s, q);
  for (int c = 0; c < 2; ++c)
    for (const auto& [j, phi] : brows[q]) tr.comp[c].emplace_back(s.beam_dof(j, c), -phi);
  return tr;
}
}  // namespace

FluidOperatorParts assemble_fluid_parts(const FluidSpace& s, const FluidStepInputs& in) {
  validate(s, in);
  const ReferenceMesh& m = s.mesh();
  const AleMap& mn = *in.map_n;
  const AleMap& mn1 = *in.map_np1;
  const int size = s.size();
  const double dt = in.dt;
  const double wq = m.quad_weight();

  Triplets tm, tv, td;
  FluidOperatorParts p;
  p.eps = in.eps;
  p.rhs_mass = Eigen::VectorXd::Zero(size);
  p.rhs_pressure = Eigen::VectorXd::Zero(size);
  p.rhs_noise = Eigen::VectorXd::Zero(size);

  for (int q = 0; q < m.num_quad(); ++q) {
    const PointBasis pb = point_basis(m, mn, q);
    const double jn = mn.jacobian()[q];
    const double jm = 0.5 * (jn + mn1.jacobian()[q]);
    const Vec2 up = value_at(in.u_prev, pb);
    for (int a = 0; a < 4; ++a)
      for (int i = 0; i < 2; ++i) {
        const int row = s.fluid_dof(pb.nodes[a], i);
        if (row < 0) continue;
        p.rhs_mass(row) += wq * jn * up(i) * pb.n[a];
        for (int b = 0; b < 4; ++b)
          for (int j = 0; j < 2; ++j) {
            const int col = s.fluid_dof(pb.nodes[b], j);
            if (col < 0) continue;
            if (i == j) tm.emplace_back(row, col, wq * jm * pb.n[a] * pb.n[b]);
            // D(N_b e_j) : D(N_a e_i)
            const double dd =
                0.5 * ((i == j ? pb.g[a].dot(pb.g[b]) : 0.0) + pb.g[a](j) * pb.g[b](i));
            tv.emplace_back(row, col, wq * 2.0 * in.nu * dt * jn * dd);
            if (in.div_rule == DivQuadrature::Gauss) td.emplace_back(row, col, wq * dt * pb.g[a](i) * pb.g[b](j));
          }
      }
  }

  if (in.div_rule == DivQuadrature::Centroid)
    for (int c = 0; c < m.num_cells(); ++c) {
      const PointBasis pb = centre_basis(m, mn, c);
      const double w = m.hz() * m.hr();
      for (int a = 0; a < 4; ++a)
        for (int i = 0; i < 2; ++i) {
          const int row = s.fluid_dof(pb.nodes[a], i);
          if (row < 0) continue;
          for (int b = 0; b < 4; ++b)
            for (int j = 0; j < 2; ++j) {
              const int col = s.fluid_dof(pb.nodes[b], j);
              if (col >= 0) td.emplace_back(row, col, w * dt * pb.g[a](i) * pb.g[b](j));
            }
        }
    }

  // Structure velocity block.
  const auto& bm = s.elastic().mass;
  for (int k = 0; k < bm.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(bm, k); it; ++it)
      for (int c = 0; c < 2; ++c)
        tm.emplace_back(s.beam_dof(it.row(), c), s.beam_dof(it.col(), c), it.value());
  const BeamCoeffs mv = bm * in.v_half;
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < s.num_beam(); ++j) p.rhs_mass(s.beam_dof(j, c)) += mv(j, c);

  // Interface penalty and slip.
  Triplets tn, ts;
  const auto brows = beam_rows(s);
  for (int q = 0; q < s.iface().size(); ++q) {
    const InterfaceGeometry& g = mn.interface()[q];
    const double w = s.iface().weight(q);
    const TraceRows tr = full_trace(s, q, brows);
    const auto nrow = combine(tr, g.normal);
    add_outer(tn, nrow, nrow, w * dt);
    const double ws = w * dt / in.alpha * g.stretch;
    if (in.slip == SlipProjection::Full) {
      for (int c = 0; c < 2; ++c) add_outer(ts, tr.comp[c], tr.comp[c], ws);
    } else {
      const auto trow = combine(tr, g.tangent);
      add_outer(ts, trow, trow, ws);
    }
  }

  // Boundary pressure work.
  for (int j = 0; j <= m.nr(); ++j) {
    const double w = pressure_weight(m, j);
    if (int d = s.fluid_dof(m.node(0, j), 0); d >= 0) p.rhs_pressure(d) += dt * in.p_in * w;
    if (int d = s.fluid_dof(m.node(m.nz(), j), 0); d >= 0) p.rhs_pressure(d) -= dt * in.p_out * w;
  }

  // Stochastic forcing loads.
  for (int n = 0; n < m.num_nodes(); ++n)
    for (int c = 0; c < 2; ++c)
      if (int d = s.fluid_dof(n, c); d >= 0) p.rhs_noise(d) += in.force.fluid(n, c);
  for (int c = 0; c < 2; ++c)
    for (int j = 0; j < s.num_beam(); ++j) p.rhs_noise(s.beam_dof(j, c)) += in.force.structure(j, c);

  p.mass = to_matrix(size, tm);
  p.viscous = to_matrix(size, tv);
  p.div_penalty = to_matrix(size, td);
  p.normal_penalty = to_matrix(size, tn);
  p.slip = to_matrix(size, ts);
  return p;
}

Eigen::SparseMatrix<double> FluidOperatorParts::static_matrix() const {
  Eigen::SparseMatrix<double> a = mass + viscous + slip;
  a += (1.0 / eps) * (div_penalty + normal_penalty);
  return a;
}

Eigen::SparseMatrix<double> assemble_advection(const FluidSpace& s, const FluidStepInputs& in,
                                               const NodalField& u_adv) {
  const ReferenceMesh& m = s.mesh();
  const AleMap& mn = *in.map_n;
  const double wq = m.quad_weight();
  Triplets t;
  t.reserve(static_cast<std::size_t>(m.num_quad()) * 32);
  for (int q = 0; q < m.num_quad(); ++q) {
    const PointBasis pb = point_basis(m, mn, q);
    const Vec2 adv = value_at(u_adv, pb) - value_at(in.w, pb);
    const double scale = 0.5 * in.dt * mn.jacobian()[q] * wq;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        // trial N_b e_i, test N_a e_i
        const double v = scale * (adv.dot(pb.g[b]) * pb.n[a] - adv.dot(pb.g[a]) * pb.n[b]);
        if (v == 0.0) continue;
        for (int i = 0; i < 2; ++i) {
          const int row = s.fluid_dof(pb.nodes[a], i);
          const int col = s.fluid_dof(pb.nodes[b], i);
          if (row >= 0 && col >= 0) t.emplace_back(row, col, v);
        }
      }
  }
  return to_matrix(s.size(), t);
}

FluidSystem assemble_fluid_system(const FluidSpace& s, const FluidStepInputs& in,
                                  const NodalField& u_adv) {
  const FluidOperatorParts p = assemble_fluid_parts(s, in);
  return {p.static_matrix() + assemble_advection(s, in, u_adv), p.rhs()};
}

double trilinear_b(const AleMap& map, const NodalField& u_adv, const NodalField& w,
                   const NodalField& u, const NodalField& q) {
  const ReferenceMesh& m = map.mesh();
  double sum = 0.0;
  for (int k = 0; k < m.num_quad(); ++k) {
    const PointBasis pb = point_basis(m, map, k);
    const Vec2 a = value_at(u_adv, pb) - value_at(w, pb);
    const Vec2 uv = value_at(u, pb), qv = value_at(q, pb);
    const Vec2 du = tgrad_at(u, pb) * a, dq = tgrad_at(q, pb) * a;
    sum += map.jacobian()[k] * (du.dot(qv) - dq.dot(uv));
  }
  return 0.5 * m.quad_weight() * sum;
}

FluidStepResult fluid_substep(const FluidSpace& s, const FluidStepInputs& in, double picard_tol,
                              int max_picard) {
  const FluidOperatorParts parts = assemble_fluid_parts(s, in);
  const Eigen::SparseMatrix<double> a0 = parts.static_matrix();
  const Eigen::VectorXd b = parts.rhs();
  const double bnorm = b.norm();

  FluidStepResult res;
  NodalField u_adv = s.constrain(in.u_prev);
  Eigen::SparseMatrix<double> a = a0 + assemble_advection(s, in, u_adv);
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(a);
  for (int it = 1; it <= max_picard; ++it) {
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
      throw FluidStepFailure("fluid step: singular Picard matrix", res);
    const Eigen::VectorXd x = lu.solve(b);
    s.unpack(x, res.u, res.v);
    a = a0 + assemble_advection(s, in, res.u);
    const double r = (a * x - b).norm();
    res.report = {it, bnorm > 0.0 ? r / bnorm : r};
    if (!std::isfinite(res.report.residual))
      throw FluidStepFailure("fluid step: non-finite Picard iterate", res);
    if (res.report.residual < picard_tol) return res;
  }
  char msg[96];
  std::snprintf(msg, sizeof msg, "fluid step: Picard iteration did not converge (residual %.3e)",
                res.report.residual);
  throw FluidStepFailure(msg, res);
}

double FluidBudget::residual() const { return std::abs(lhs() - rhs()); }

double pair_forcing(const FluidSpace& s, const ForcingPair& force, const NodalField& u,
                    const BeamCoeffs& v) {
  double sum = 0.0;
  for (int n = 0; n < s.mesh().num_nodes(); ++n)
    for (int c = 0; c < 2; ++c)
      if (!s.constrained(n, c)) sum += force.fluid(n, c) * u(n, c);
  sum += (force.structure.array() * v.array()).sum();
  return sum;
}

FluidBudget fluid_budget(const FluidSpace& s, const FluidStepInputs& in, const NodalField& u_new,
                         const BeamCoeffs& v_new) {
  const ReferenceMesh& m = s.mesh();
  const AleMap& mn = *in.map_n;
  const AleMap& mn1 = *in.map_np1;
  const double wq = m.quad_weight();
  const double dt = in.dt;
  FluidBudget fb;
  for (int q = 0; q < m.num_quad(); ++q) {
    const PointBasis pb = point_basis(m, mn, q);
    const double jn = mn.jacobian()[q], jn1 = mn1.jacobian()[q];
    const Vec2 u = value_at(u_new, pb), up = value_at(in.u_prev, pb);
    const Mat2 gu = tgrad_at(u_new, pb);
    const Mat2 d = 0.5 * (gu + gu.transpose());
    fb.kinetic_new += 0.5 * wq * jn1 * u.squaredNorm();
    fb.kinetic_half += 0.5 * wq * jn * up.squaredNorm();
    fb.c2 += 0.25 * wq * jn * (u - up).squaredNorm();
    fb.d2_viscous += 2.0 * in.nu * dt * wq * jn * d.squaredNorm();
    if (in.div_rule == DivQuadrature::Gauss) fb.d2_div += dt / in.eps * wq * gu.trace() * gu.trace();
  }
  if (in.div_rule == DivQuadrature::Centroid)
    for (int c = 0; c < m.num_cells(); ++c) {
      const double dv = tgrad_at(u_new, centre_basis(m, mn, c)).trace();
      fb.d2_div += dt / in.eps * m.hz() * m.hr() * dv * dv;
    }
  const auto& bm = s.elastic().mass;
  fb.kinetic_new += 0.5 * quad_form(bm, v_new);
  fb.kinetic_half += 0.5 * quad_form(bm, in.v_half);
  fb.c2 += 0.25 * quad_form(bm, v_new - in.v_half);

  const BeamSpace& beam = s.beam();
  for (int q = 0; q < s.iface().size(); ++q) {
    const InterfaceGeometry& g = mn.interface()[q];
    const int e = s.iface().edge(q);
    const double xi = s.iface().edge_xi(q);
    const Vec2 u = (1.0 - xi) * u_new.row(m.gamma_node(e)).transpose() +
                   xi * u_new.row(m.gamma_node(e + 1)).transpose();
    const Vec2 jump = u - beam.evaluate(v_new, s.iface().z(q));
    const double w = s.iface().weight(q);
    const double jn = jump.dot(g.normal);
    fb.d2_normal += dt / in.eps * w * jn * jn;
    const double slip_sq =
        in.slip == SlipProjection::Full ? jump.squaredNorm() : std::pow(jump.dot(g.tangent), 2);
    fb.d2_slip += dt / in.alpha * w * g.stretch * slip_sq;
  }

  double in_flux = 0.0, out_flux = 0.0;
  for (int j = 0; j <= m.nr(); ++j) {
    in_flux += pressure_weight(m, j) * u_new(m.node(0, j), 0);
    out_flux += pressure_weight(m, j) * u_new(m.node(m.nz(), j), 0);
  }
  fb.pressure_work = dt * (in.p_in * in_flux - in.p_out * out_flux);
  fb.stochastic_new = pair_forcing(s, in.force, u_new, v_new);
  return fb;
}

double fluid_energy_identity_residual(const FluidSpace& s, const FluidStepInputs& in,
                                      const FluidStepResult& out) {
  return fluid_budget(s, in, out.u, out.v).residual();
}

std::pair<double, double> forcing_dual_norms(const FluidSpace& s, const AleMap& map_n,
                                             const ForcingPair& force) {
  const ReferenceMesh& m = s.mesh();
  Triplets t;
  for (int q = 0; q < m.num_quad(); ++q) {
    const PointBasis pb = point_basis(m, map_n, q);
    const double w = m.quad_weight() * map_n.jacobian()[q];
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        for (int c = 0; c < 2; ++c) {
          const int i = s.fluid_dof(pb.nodes[a], c), j = s.fluid_dof(pb.nodes[b], c);
          if (i >= 0 && j >= 0) t.emplace_back(i, j, w * pb.n[a] * pb.n[b]);
        }
  }
  Eigen::SparseMatrix<double> mj(s.num_fluid(), s.num_fluid());
  mj.setFromTriplets(t.begin(), t.end());
  Eigen::VectorXd b = Eigen::VectorXd::Zero(s.num_fluid());
  for (int n = 0; n < m.num_nodes(); ++n)
    for (int c = 0; c < 2; ++c)
      if (int d = s.fluid_dof(n, c); d >= 0) b(d) = force.fluid(n, c);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fs(mj);
  const double fluid = b.dot(fs.solve(b));
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> bs(s.elastic().mass);
  const BeamCoeffs y = bs.solve(force.structure);
  const double structure = (force.structure.array() * y.array()).sum();
  return {fluid, structure};
}

}  // namespace stochfsi
