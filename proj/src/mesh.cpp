#include "stochfsi/mesh.hpp"

#include <algorithm>
#include <cmath>

#include "stochfsi/quadrature.hpp"

namespace stochfsi {

ReferenceMesh::ReferenceMesh(double length, int nz, int nr)
    : length_(length), nz_(nz), nr_(nr) {
  if (!(length > 0.0)) throw ConfigurationError("mesh length must be positive");
  if (nz < 2 || nr < 2) throw ConfigurationError("mesh needs nz >= 2 and nr >= 2");
  const double g = 0.5 / std::sqrt(3.0);
  const double pts[2] = {0.5 - g, 0.5 + g};
  for (int k = 0; k < kQuadPerCell; ++k) {
    quad_local_[k] = {pts[k % 2], pts[k / 2]};
    quad_basis_[k] = basis(quad_local_[k][0], quad_local_[k][1]);
  }
}

std::array<int, 4> ReferenceMesh::cell_nodes(int c) const {
  const int i = c % nz_;
  const int j = c / nz_;
  return {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
}

Vec2 ReferenceMesh::cell_origin(int c) const {
  return {(c % nz_) * hz(), (c / nz_) * hr()};
}

CellPoint ReferenceMesh::quad_point(int q) const {
  const int k = q % kQuadPerCell;
  return {q / kQuadPerCell, quad_local_[k][0], quad_local_[k][1]};
}

CellBasis ReferenceMesh::basis(double xi, double zeta) const {
  CellBasis b;
  b.value = {(1 - xi) * (1 - zeta), xi * (1 - zeta), xi * zeta, (1 - xi) * zeta};
  const double iz = 1.0 / hz();
  const double ir = 1.0 / hr();
  b.grad[0] = {-(1 - zeta) * iz, -(1 - xi) * ir};
  b.grad[1] = {(1 - zeta) * iz, -xi * ir};
  b.grad[2] = {zeta * iz, xi * ir};
  b.grad[3] = {-zeta * iz, (1 - xi) * ir};
  return b;
}

Vec2 ReferenceMesh::physical(const CellPoint& p) const {
  return cell_origin(p.cell) + Vec2(p.xi * hz(), p.zeta * hr());
}

CellPoint ReferenceMesh::locate(const Vec2& x) const {
  const double sz = x.x() / hz();
  const double sr = x.y() / hr();
  const int i = std::clamp(static_cast<int>(std::floor(sz)), 0, nz_ - 1);
  const int j = std::clamp(static_cast<int>(std::floor(sr)), 0, nr_ - 1);
  return {cell(i, j), sz - i, sr - j};
}

FieldSample ReferenceMesh::evaluate(const NodalField& f, const CellPoint& p) const {
  const CellBasis b = basis(p.xi, p.zeta);
  const auto nodes = cell_nodes(p.cell);
  FieldSample s;
  for (int a = 0; a < 4; ++a) {
    const Vec2 fa = f.row(nodes[a]).transpose();
    s.value += b.value[a] * fa;
    s.grad += fa * b.grad[a].transpose();
  }
  return s;
}

NodalField ReferenceMesh::interpolate(const std::function<Vec2(const Vec2&)>& f) const {
  NodalField out(num_nodes(), 2);
  for (int n = 0; n < num_nodes(); ++n) out.row(n) = f(coords(n)).transpose();
  return out;
}

double ReferenceMesh::inner(const NodalField& a, const NodalField& b) const {
  double sum = 0.0;
  for (int c = 0; c < num_cells(); ++c) {
    const auto nodes = cell_nodes(c);
    for (int k = 0; k < kQuadPerCell; ++k) {
      const CellBasis& basis = quad_basis_[k];
      Vec2 va = Vec2::Zero(), vb = Vec2::Zero();
      for (int n = 0; n < 4; ++n) {
        va += basis.value[n] * a.row(nodes[n]).transpose();
        vb += basis.value[n] * b.row(nodes[n]).transpose();
      }
      sum += va.dot(vb);
    }
  }
  return sum * quad_weight();
}

double ReferenceMesh::norm(const NodalField& a) const { return std::sqrt(inner(a, a)); }

InterfaceQuadrature::InterfaceQuadrature(double length, int fluid_cells, int beam_elements) {
  if (fluid_cells < 1 || beam_elements < 1)
    throw ConfigurationError("interface quadrature needs positive cell counts");
  std::vector<double> breaks;
  for (int i = 0; i <= fluid_cells; ++i) breaks.push_back(length * i / fluid_cells);
  for (int k = 0; k <= beam_elements; ++k) breaks.push_back(length * k / beam_elements);
  std::sort(breaks.begin(), breaks.end());
  const double tol = 1e-12 * length;
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [tol](double a, double b) { return std::abs(a - b) < tol; }),
               breaks.end());

  const GaussRule rule = gauss_legendre(3);
  const double hz = length / fluid_cells;
  for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
    const double a = breaks[s];
    const double h = breaks[s + 1] - a;
    for (std::size_t k = 0; k < rule.points.size(); ++k) {
      const double z = a + h * rule.points[k];
      const int e = std::clamp(static_cast<int>(std::floor(z / hz)), 0, fluid_cells - 1);
      z_.push_back(z);
      w_.push_back(h * rule.weights[k]);
      edge_.push_back(e);
      edge_xi_.push_back(z / hz - e);
    }
  }
}

}  // namespace stochfsi
