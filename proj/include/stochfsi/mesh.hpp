#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "stochfsi/types.hpp"

namespace stochfsi {

/// Bilinear shape functions and their physical gradients at one local point.
struct CellBasis {
  std::array<double, 4> value{};
  std::array<Vec2, 4> grad{};
};

/// Structured mesh of the fixed rectangle (0,L) x (0,1) with bilinear cells and
/// a 2x2 Gauss rule per cell.
///
/// Node (i, j) sits at (i*hz, j*hr), i along z and j along r. Cell-local node
/// order is (i,j), (i+1,j), (i+1,j+1), (i,j+1). Boundary parts: Gamma (r = 1,
/// the elastic wall), inlet (z = 0), outlet (z = L), bottom (r = 0).
class ReferenceMesh {
public:
  static constexpr int kQuadPerCell = 4;

  ReferenceMesh(double length, int nz, int nr);

  double length() const { return length_; }
  int nz() const { return nz_; }
  int nr() const { return nr_; }
  double hz() const { return length_ / nz_; }
  double hr() const { return 1.0 / nr_; }

  int num_nodes() const { return (nz_ + 1) * (nr_ + 1); }
  int num_cells() const { return nz_ * nr_; }
  int num_quad() const { return num_cells() * kQuadPerCell; }

  int node(int i, int j) const { return j * (nz_ + 1) + i; }
  int node_i(int n) const { return n % (nz_ + 1); }
  int node_j(int n) const { return n / (nz_ + 1); }
  Vec2 coords(int n) const { return {node_i(n) * hz(), node_j(n) * hr()}; }

  int cell(int i, int j) const { return j * nz_ + i; }
  std::array<int, 4> cell_nodes(int c) const;
  Vec2 cell_origin(int c) const;

  bool on_gamma(int n) const { return node_j(n) == nr_; }
  bool on_inlet(int n) const { return node_i(n) == 0; }
  bool on_outlet(int n) const { return node_i(n) == nz_; }
  bool on_bottom(int n) const { return node_j(n) == 0; }
  bool on_boundary(int n) const {
    return on_gamma(n) || on_inlet(n) || on_outlet(n) || on_bottom(n);
  }
  /// Node on Gamma with z-index i.
  int gamma_node(int i) const { return node(i, nr_); }

  CellPoint quad_point(int q) const;
  /// Quadrature weight, identical for every point of the uniform mesh.
  double quad_weight() const { return 0.25 * hz() * hr(); }
  /// Cached basis at the k-th Gauss point of any cell.
  const CellBasis& quad_basis(int k) const { return quad_basis_[k]; }
  CellBasis basis(double xi, double zeta) const;

  Vec2 physical(const CellPoint& p) const;
  /// Cell containing a physical point (points on edges go to the lower cell).
  CellPoint locate(const Vec2& x) const;

  FieldSample evaluate(const NodalField& f, const CellPoint& p) const;
  NodalField interpolate(const std::function<Vec2(const Vec2&)>& f) const;

  /// Plain L2(O) inner product of two nodal fields, 2x2 Gauss.
  double inner(const NodalField& a, const NodalField& b) const;
  double norm(const NodalField& a) const;

private:
  double length_;
  int nz_;
  int nr_;
  std::array<CellBasis, kQuadPerCell> quad_basis_;
  std::array<std::array<double, 2>, kQuadPerCell> quad_local_;
};

using MeshPtr = std::shared_ptr<const ReferenceMesh>;

/// Quadrature on Gamma = (0, L) whose sub-intervals are aligned with both the
/// fluid edges and the beam elements, 3 Gauss points per sub-interval.
class InterfaceQuadrature {
public:
  InterfaceQuadrature(double length, int fluid_cells, int beam_elements);

  int size() const { return static_cast<int>(z_.size()); }
  double z(int q) const { return z_[q]; }
  double weight(int q) const { return w_[q]; }
  /// Fluid top-edge index and local coordinate of point q.
  int edge(int q) const { return edge_[q]; }
  double edge_xi(int q) const { return edge_xi_[q]; }

private:
  std::vector<double> z_, w_, edge_xi_;
  std::vector<int> edge_;
};

}  // namespace stochfsi
