#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "stochfsi/mesh.hpp"
#include "stochfsi/spectrum.hpp"
#include "stochfsi/types.hpp"

namespace stochfsi {

/// Boundary displacement on Gamma as seen by the ALE construction: values at
/// the Gamma mesh nodes and the slope d/dz eta at the interface quadrature
/// points.
struct InterfaceTrace {
  std::vector<Vec2> nodal;
  std::vector<Vec2> slope;
};

InterfaceTrace make_trace(const ReferenceMesh& mesh, const InterfaceQuadrature& iface,
                          const std::function<Vec2(double)>& value,
                          const std::function<Vec2(double)>& slope);

/// Deformed-wall geometry at an interface quadrature point. `tangent` and
/// `normal` are unit vectors, `stretch` is |d/dz (id + eta)|.
struct InterfaceGeometry {
  Vec2 normal = Vec2(0.0, 1.0);
  Vec2 tangent = Vec2(1.0, 0.0);
  double stretch = 1.0;
};

struct GeometryBounds {
  double j_min = 1.0;         ///< min of J over quadrature points
  double j_min_vertex = 1.0;  ///< min of J over cell corners (exact inf for bilinear maps)
  double eta_norm = 0.0;      ///< interface H^s proxy norm of eta
  bool injective = true;
};

/// Gradient of the map and its spatial derivatives at a point.
struct MapSample {
  Mat2 grad = Mat2::Identity();
  std::array<Mat2, 2> dgrad{Mat2::Zero(), Mat2::Zero()};
};

/// Discrete ALE map A = id + d from the reference rectangle, d bilinear.
/// Read-only after construction.
class AleMap {
public:
  AleMap(MeshPtr mesh, const InterfaceQuadrature& iface, NodalField displacement,
         const std::vector<Vec2>& interface_slope, double eta_norm);

  const ReferenceMesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const NodalField& displacement() const { return d_; }

  const std::vector<Mat2>& grad() const { return grad_; }
  const std::vector<Mat2>& inv_grad() const { return inv_grad_; }
  const std::vector<double>& jacobian() const { return jac_; }
  const std::vector<InterfaceGeometry>& interface() const { return iface_; }
  const GeometryBounds& bounds() const { return bounds_; }

  MapSample sample(const CellPoint& p) const;

  /// Throws GeometryError unless the map passed the injectivity check.
  void require_injective() const;

private:
  MeshPtr mesh_;
  NodalField d_;
  std::vector<Mat2> grad_, inv_grad_;
  std::vector<double> jac_;
  std::vector<InterfaceGeometry> iface_;
  GeometryBounds bounds_;
};

/// Factorized discrete Laplacian with Dirichlet data on all of the boundary.
/// One instance per mesh; extensions of many boundary data reuse it.
class HarmonicExtension {
public:
  HarmonicExtension(MeshPtr mesh, std::shared_ptr<const InterfaceQuadrature> iface,
                    double s_exp = 1.75);

  AleMap extend(const InterfaceTrace& trace) const;
  /// Scalar extension; `boundary` holds nodal values (only boundary entries are read).
  Eigen::VectorXd extend_scalar(const Eigen::VectorXd& boundary) const;

  const MeshPtr& mesh() const { return mesh_; }
  const InterfaceQuadrature& iface() const { return *iface_; }
  const InterfaceSpectrum& spectrum() const { return spectrum_; }
  double s_exp() const { return s_exp_; }

private:
  MeshPtr mesh_;
  std::shared_ptr<const InterfaceQuadrature> iface_;
  double s_exp_;
  InterfaceSpectrum spectrum_;
  std::vector<int> interior_index_;  // node -> interior unknown or -1
  Eigen::SparseMatrix<double> k_ib_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

/// Single-shot convenience around HarmonicExtension.
AleMap harmonic_extension(MeshPtr mesh, const InterfaceQuadrature& iface,
                          const InterfaceTrace& trace, double s_exp = 1.75);

/// (||w||_{L2(O)}, ||v||_{H^{-1/2}(Gamma)}) for the harmonic extension w of
/// scalar wall data v given at the Gamma nodes (v(0) = v(L) = 0).
std::pair<double, double> harmonic_extension_scalar_bound_check(MeshPtr mesh,
                                                                const Eigen::VectorXd& v);

Mat2 sym(const Mat2& m);

/// grad u (grad A)^{-1} at every quadrature point.
std::vector<Mat2> transformed_gradient(const NodalField& u, const AleMap& map);
std::vector<double> transformed_divergence(const NodalField& u, const AleMap& map);

/// Vector field evaluable anywhere inside cells, with its gradient.
using PointwiseField = std::function<FieldSample(const CellPoint&)>;

PointwiseField nodal_field(MeshPtr mesh, NodalField f);

/// (J_to)^{-1} grad A_to (J_from (grad A_from)^{-1} u); gradients by product rule.
PointwiseField piola_transform(PointwiseField u, const AleMap& from, const AleMap& to);

/// div^eta u = tr(grad u (grad A)^{-1}) at a point.
double transformed_divergence_at(const PointwiseField& u, const AleMap& map,
                                 const CellPoint& p);

/// Nodal ALE velocity (d_next - d_prev) / dt.
NodalField ale_velocity(const AleMap& prev, const AleMap& next, double dt);

/// Discrete L2 norm of (J_next - J_prev)/dt - J_prev div^{prev} w, which is
/// O(dt) for the left-endpoint evaluation used here.
double jacobian_identity_residual(const AleMap& prev, const AleMap& next, double dt);

}  // namespace stochfsi
