#include "stochfsi/ale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stochfsi {

namespace {

Mat2 cofactor_t(const Mat2& f) {
  // J F^{-1} for a 2x2 matrix.
  Mat2 c;
  c << f(1, 1), -f(0, 1), -f(1, 0), f(0, 0);
  return c;
}

}  // namespace

InterfaceTrace make_trace(const ReferenceMesh& mesh, const InterfaceQuadrature& iface,
                          const std::function<Vec2(double)>& value,
                          const std::function<Vec2(double)>& slope) {
  InterfaceTrace t;
  t.nodal.resize(mesh.nz() + 1);
  for (int i = 0; i <= mesh.nz(); ++i) t.nodal[i] = value(i * mesh.hz());
  t.slope.resize(iface.size());
  for (int q = 0; q < iface.size(); ++q) t.slope[q] = slope(iface.z(q));
  return t;
}

AleMap::AleMap(MeshPtr mesh, const InterfaceQuadrature& iface, NodalField displacement,
               const std::vector<Vec2>& interface_slope, double eta_norm)
    : mesh_(std::move(mesh)), d_(std::move(displacement)) {
  const ReferenceMesh& m = *mesh_;
  if (d_.rows() != m.num_nodes()) throw ConfigurationError("displacement size mismatch");
  if (static_cast<int>(interface_slope.size()) != iface.size())
    throw ConfigurationError("interface slope size mismatch");

  grad_.resize(m.num_quad());
  inv_grad_.resize(m.num_quad());
  jac_.resize(m.num_quad());
  bounds_.j_min = std::numeric_limits<double>::infinity();
  bool singular = false;
  for (int q = 0; q < m.num_quad(); ++q) {
    const Mat2 f = Mat2::Identity() + m.evaluate(d_, m.quad_point(q)).grad;
    const double j = f.determinant();
    grad_[q] = f;
    jac_[q] = j;
    if (j == 0.0) {
      singular = true;
      inv_grad_[q].setConstant(std::numeric_limits<double>::quiet_NaN());
    } else {
      inv_grad_[q] = cofactor_t(f) / j;
    }
    bounds_.j_min = std::min(bounds_.j_min, j);
  }

  bounds_.j_min_vertex = std::numeric_limits<double>::infinity();
  static constexpr double corners[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  for (int c = 0; c < m.num_cells(); ++c)
    for (const auto& xz : corners) {
      const Mat2 f = Mat2::Identity() + m.evaluate(d_, {c, xz[0], xz[1]}).grad;
      bounds_.j_min_vertex = std::min(bounds_.j_min_vertex, f.determinant());
    }

  iface_.resize(iface.size());
  bool folded_wall = false;
  for (int q = 0; q < iface.size(); ++q) {
    const Vec2 t = Vec2(1.0, 0.0) + interface_slope[q];
    const double s = t.norm();
    InterfaceGeometry& g = iface_[q];
    g.stretch = s;
    g.tangent = t / s;
    g.normal = Vec2(-g.tangent.y(), g.tangent.x());
    if (!(t.x() > 0.0)) folded_wall = true;
  }
  bounds_.eta_norm = eta_norm;
  bounds_.injective = !singular && !folded_wall && bounds_.j_min_vertex > 0.0;
}

MapSample AleMap::sample(const CellPoint& p) const {
  const ReferenceMesh& m = *mesh_;
  const auto nodes = m.cell_nodes(p.cell);
  MapSample s;
  s.grad = Mat2::Identity() + m.evaluate(d_, p).grad;
  // Only the mixed second derivative of a bilinear map is nonzero:
  // d/dz dA_i/dr = d/dr dA_i/dz = (d0 - d1 + d2 - d3)_i / (hz hr).
  const Vec2 mixed = (d_.row(nodes[0]) - d_.row(nodes[1]) + d_.row(nodes[2]) -
                      d_.row(nodes[3])).transpose() /
                     (m.hz() * m.hr());
  s.dgrad[0].setZero();
  s.dgrad[1].setZero();
  s.dgrad[0].col(1) = mixed;  // d/dz of column dA/dr
  s.dgrad[1].col(0) = mixed;  // d/dr of column dA/dz
  return s;
}

void AleMap::require_injective() const {
  if (!bounds_.injective)
    throw GeometryError("ALE map is not injective (min J = " +
                        std::to_string(bounds_.j_min_vertex) + ")");
}

HarmonicExtension::HarmonicExtension(MeshPtr mesh,
                                     std::shared_ptr<const InterfaceQuadrature> iface,
                                     double s_exp)
    : mesh_(std::move(mesh)),
      iface_(std::move(iface)),
      s_exp_(s_exp),
      spectrum_(mesh_->length(), mesh_->nz()) {
  const ReferenceMesh& m = *mesh_;
  interior_index_.assign(m.num_nodes(), -1);
  int ni = 0;
  for (int n = 0; n < m.num_nodes(); ++n)
    if (!m.on_boundary(n)) interior_index_[n] = ni++;

  std::vector<Eigen::Triplet<double>> tii, tib;
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto nodes = m.cell_nodes(c);
    Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
    for (int k = 0; k < ReferenceMesh::kQuadPerCell; ++k) {
      const CellBasis& b = m.quad_basis(k);
      for (int a = 0; a < 4; ++a)
        for (int bb = 0; bb < 4; ++bb) ke(a, bb) += b.grad[a].dot(b.grad[bb]);
    }
    ke *= m.quad_weight();
    for (int a = 0; a < 4; ++a) {
      const int ia = interior_index_[nodes[a]];
      if (ia < 0) continue;
      for (int bb = 0; bb < 4; ++bb) {
        const int ib = interior_index_[nodes[bb]];
        if (ib >= 0)
          tii.emplace_back(ia, ib, ke(a, bb));
        else
          tib.emplace_back(ia, nodes[bb], ke(a, bb));
      }
    }
  }
  Eigen::SparseMatrix<double> kii(ni, ni);
  kii.setFromTriplets(tii.begin(), tii.end());
  k_ib_.resize(ni, m.num_nodes());
  k_ib_.setFromTriplets(tib.begin(), tib.end());
  solver_.compute(kii);
  if (solver_.info() != Eigen::Success)
    throw ConfigurationError("harmonic extension: singular Laplacian (degenerate mesh)");
}

Eigen::VectorXd HarmonicExtension::extend_scalar(const Eigen::VectorXd& boundary) const {
  const ReferenceMesh& m = *mesh_;
  Eigen::VectorXd full = Eigen::VectorXd::Zero(m.num_nodes());
  for (int n = 0; n < m.num_nodes(); ++n)
    if (interior_index_[n] < 0) full(n) = boundary(n);
  const Eigen::VectorXd interior = solver_.solve(-(k_ib_ * full));
  if (solver_.info() != Eigen::Success)
    throw ConfigurationError("harmonic extension: solve failed");
  for (int n = 0; n < m.num_nodes(); ++n)
    if (interior_index_[n] >= 0) full(n) = interior(interior_index_[n]);
  return full;
}

AleMap HarmonicExtension::extend(const InterfaceTrace& trace) const {
  const ReferenceMesh& m = *mesh_;
  if (static_cast<int>(trace.nodal.size()) != m.nz() + 1)
    throw ConfigurationError("interface trace has wrong number of nodes");
  const double tol = 1e-12;
  if (trace.nodal.front().norm() > tol || trace.nodal.back().norm() > tol)
    throw ConfigurationError("wall displacement must vanish at z = 0 and z = L");

  NodalField d(m.num_nodes(), 2);
  for (int comp = 0; comp < 2; ++comp) {
    Eigen::VectorXd boundary = Eigen::VectorXd::Zero(m.num_nodes());
    // Corners take the Gamma value; clamping makes it zero anyway.
    for (int i = 0; i <= m.nz(); ++i) boundary(m.gamma_node(i)) = trace.nodal[i](comp);
    d.col(comp) = extend_scalar(boundary);
  }
  const double eta_norm = spectrum_.weighted_norm(trace.nodal, s_exp_);
  return AleMap(mesh_, *iface_, std::move(d), trace.slope, eta_norm);
}

AleMap harmonic_extension(MeshPtr mesh, const InterfaceQuadrature& iface,
                          const InterfaceTrace& trace, double s_exp) {
  HarmonicExtension ext(mesh, std::make_shared<const InterfaceQuadrature>(iface), s_exp);
  return ext.extend(trace);
}

std::pair<double, double> harmonic_extension_scalar_bound_check(MeshPtr mesh,
                                                                const Eigen::VectorXd& v) {
  const ReferenceMesh& m = *mesh;
  if (v.size() != m.nz() + 1) throw ConfigurationError("wall data has wrong size");
  if (std::abs(v(0)) > 1e-12 || std::abs(v(m.nz())) > 1e-12)
    throw ConfigurationError("wall data must vanish at z = 0 and z = L");
  auto iface = std::make_shared<const InterfaceQuadrature>(m.length(), m.nz(), m.nz());
  HarmonicExtension ext(mesh, iface);
  Eigen::VectorXd boundary = Eigen::VectorXd::Zero(m.num_nodes());
  for (int i = 0; i <= m.nz(); ++i) boundary(m.gamma_node(i)) = v(i);
  const Eigen::VectorXd w = ext.extend_scalar(boundary);
  NodalField wf = NodalField::Zero(m.num_nodes(), 2);
  wf.col(0) = w;
  const double lhs = m.norm(wf);
  const double rhs = ext.spectrum().weighted_norm(v.segment(1, m.nz() - 1), -0.5);
  return {lhs, rhs};
}

Mat2 sym(const Mat2& m) { return 0.5 * (m + m.transpose()); }

std::vector<Mat2> transformed_gradient(const NodalField& u, const AleMap& map) {
  map.require_injective();
  const ReferenceMesh& m = map.mesh();
  std::vector<Mat2> out(m.num_quad());
  for (int q = 0; q < m.num_quad(); ++q)
    out[q] = m.evaluate(u, m.quad_point(q)).grad * map.inv_grad()[q];
  return out;
}

std::vector<double> transformed_divergence(const NodalField& u, const AleMap& map) {
  const auto g = transformed_gradient(u, map);
  std::vector<double> out(g.size());
  for (std::size_t q = 0; q < g.size(); ++q) out[q] = g[q].trace();
  return out;
}

PointwiseField nodal_field(MeshPtr mesh, NodalField f) {
  return [mesh = std::move(mesh), f = std::move(f)](const CellPoint& p) {
    return mesh->evaluate(f, p);
  };
}

PointwiseField piola_transform(PointwiseField u, const AleMap& from, const AleMap& to) {
  from.require_injective();
  to.require_injective();
  if (&from.mesh() != &to.mesh() && (from.mesh().nz() != to.mesh().nz() ||
                                     from.mesh().nr() != to.mesh().nr()))
    throw ConfigurationError("piola_transform: maps live on different meshes");
  auto src = std::make_shared<const AleMap>(from);
  auto dst = std::make_shared<const AleMap>(to);
  return [u = std::move(u), src, dst](const CellPoint& p) {
    const FieldSample us = u(p);
    // Reference (pulled-back) field v = cof(F_from)^T u.
    const MapSample fs = src->sample(p);
    const Mat2 c = cofactor_t(fs.grad);
    FieldSample vs;
    vs.value = c * us.value;
    for (int j = 0; j < 2; ++j)
      vs.grad.col(j) = cofactor_t(fs.dgrad[j]) * us.value + c * us.grad.col(j);
    // Push forward with F_to / J_to.
    const MapSample ts = dst->sample(p);
    const double jt = ts.grad.determinant();
    FieldSample out;
    out.value = ts.grad * vs.value / jt;
    for (int j = 0; j < 2; ++j) {
      // d/dx_j det F = tr(cof(F)^T dF_j)
      const double djt = (cofactor_t(ts.grad) * ts.dgrad[j]).trace();
      out.grad.col(j) = (ts.dgrad[j] * vs.value + ts.grad * vs.grad.col(j)) / jt -
                        ts.grad * vs.value * djt / (jt * jt);
    }
    return out;
  };
}

double transformed_divergence_at(const PointwiseField& u, const AleMap& map,
                                 const CellPoint& p) {
  const Mat2 f = map.sample(p).grad;
  const double j = f.determinant();
  if (j == 0.0) throw GeometryError("transformed_divergence_at: singular map gradient");
  return (u(p).grad * (cofactor_t(f) / j)).trace();
}

NodalField ale_velocity(const AleMap& prev, const AleMap& next, double dt) {
  if (!(dt > 0.0)) throw ConfigurationError("ale_velocity: dt must be positive");
  if (prev.displacement().rows() != next.displacement().rows() ||
      prev.mesh().nz() != next.mesh().nz() || prev.mesh().nr() != next.mesh().nr())
    throw ConfigurationError("ale_velocity: maps live on different meshes");
  return (next.displacement() - prev.displacement()) / dt;
}

double jacobian_identity_residual(const AleMap& prev, const AleMap& next, double dt) {
  const NodalField w = ale_velocity(prev, next, dt);
  const ReferenceMesh& m = prev.mesh();
  double sum = 0.0;
  for (int q = 0; q < m.num_quad(); ++q) {
    const Mat2 gw = m.evaluate(w, m.quad_point(q)).grad;
    const double rate = (next.jacobian()[q] - prev.jacobian()[q]) / dt;
    const double model = prev.jacobian()[q] * (gw * prev.inv_grad()[q]).trace();
    sum += (rate - model) * (rate - model);
  }
  return std::sqrt(sum * m.quad_weight());
}

}  // namespace stochfsi
