#include "stochfsi/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stochfsi/philox.hpp"

namespace stochfsi {

namespace {
constexpr std::uint32_t kRootStream = 0;
}

WienerProcess make_wiener(int modes, double decay, std::uint64_t seed) {
  if (modes < 1) throw ConfigurationError("noise needs at least one mode");
  if (decay < 0.0) throw ConfigurationError("noise spectrum must be nonincreasing");
  WienerProcess w;
  w.seed = seed;
  for (int k = 1; k <= modes; ++k) w.q.push_back(std::pow(static_cast<double>(k), -decay));
  return w;
}

Eigen::VectorXd increment_at(const WienerProcess& w, std::uint64_t step, double dt) {
  Eigen::VectorXd out(w.modes());
  for (int k = 0; k < w.modes(); ++k)
    out(k) = std::sqrt(w.q[k] * dt) *
             keyed_normal(w.seed, step, static_cast<std::uint32_t>(k), kRootStream);
  return out;
}

Eigen::VectorXd sample_increment(WienerProcess& w, double dt) {
  if (!(dt > 0.0)) throw ConfigurationError("sample_increment: dt must be positive");
  return increment_at(w, w.counter++, dt);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> bridge_split(const WienerProcess& w,
                                                         std::uint64_t step, std::uint32_t node,
                                                         const Eigen::VectorXd& dw, double dt) {
  Eigen::VectorXd first(dw.size());
  for (int k = 0; k < dw.size(); ++k)
    first(k) = 0.5 * dw(k) +
               std::sqrt(0.25 * w.q[k] * dt) *
                   keyed_normal(w.seed, step, static_cast<std::uint32_t>(k), node);
  Eigen::VectorXd second = dw - first;
  return {first, second};
}

NodalField fluid_load(const ReferenceMesh& mesh, const NodalField& f) {
  NodalField out = NodalField::Zero(mesh.num_nodes(), 2);
  for (int q = 0; q < mesh.num_quad(); ++q) {
    const CellPoint p = mesh.quad_point(q);
    const Vec2 fv = mesh.evaluate(f, p).value;
    const auto nodes = mesh.cell_nodes(p.cell);
    const CellBasis& b = mesh.quad_basis(q % ReferenceMesh::kQuadPerCell);
    for (int a = 0; a < 4; ++a) out.row(nodes[a]) += mesh.quad_weight() * b.value[a] * fv.transpose();
  }
  return out;
}

NoiseCoefficient::NoiseCoefficient(const HarmonicExtension& ext, const ElasticOperator& op,
                                   std::vector<double> q, double gain)
    : mesh_(ext.mesh()), op_(&op), q_(std::move(q)), gain_(gain) {
  if (q_.empty()) throw ConfigurationError("noise needs at least one mode");
  for (std::size_t k = 0; k < q_.size(); ++k)
    if (!(q_[k] > 0.0) || (k > 0 && q_[k] > q_[k - 1]))
      throw ConfigurationError("noise spectrum must be positive and nonincreasing");
  if (gain < 0.0 || gain > 1.0) throw ConfigurationError("noise gain must lie in [0, 1]");

  const ReferenceMesh& m = *mesh_;
  const BeamSpace& space = *op.space;
  const double len = m.length();
  kappa_ = std::min(1.0, std::sqrt(op.min_eigenvalue));

  const int nk = modes();
  std::vector<BeamCoeffs> structure_shape;
  for (int k = 1; k <= nk; ++k) {
    const double wave = k * std::numbers::pi / len;
    Eigen::VectorXd boundary = Eigen::VectorXd::Zero(m.num_nodes());
    for (int i = 0; i <= m.nz(); ++i) boundary(m.gamma_node(i)) = std::sin(wave * i * m.hz());
    NodalField f = NodalField::Zero(m.num_nodes(), 2);
    f.col(1) = ext.extend_scalar(boundary);
    fluid_loads_.push_back(fluid_load(m, f));
    fluid_modes_.push_back(std::move(f));
    structure_loads_.push_back(
        space.load([wave](double z) { return Vec2(0.0, std::sin(wave * z)); }));
  }
  gram_.resize(nk, nk);
  for (int k = 0; k < nk; ++k)
    for (int l = 0; l < nk; ++l) {
      const double fluid = m.inner(fluid_modes_[k], fluid_modes_[l]);
      const double structure = (k == l) ? 0.5 * len : 0.0;  // sine modes are orthogonal
      gram_(k, l) = fluid + structure;
    }
  double total = 0.0;
  for (int k = 0; k < nk; ++k) total += q_[k] * gram_(k, k);
  c_ = 1.0 / std::sqrt(total);
}

double NoiseCoefficient::amplitude(const NodalField& u, const BeamCoeffs& eta) const {
  const double eta_l2 = std::sqrt(std::max(0.0, quad_form(op_->mass, eta)));
  return gain_ * c_ * (mesh_->norm(u) + kappa_ * eta_l2);
}

double NoiseCoefficient::hs_norm_sq(const NodalField& u, const BeamCoeffs& eta) const {
  const double a = amplitude(u, eta);
  double s = 0.0;
  for (int k = 0; k < modes(); ++k) s += q_[k] * a * a * gram_(k, k);
  return s;
}

ForcingPair NoiseCoefficient::apply_amplitude(double amplitude, const Eigen::VectorXd& dw) const {
  if (dw.size() != modes()) throw ConfigurationError("apply_G: increment has wrong size");
  ForcingPair out = ForcingPair::zero(mesh_->num_nodes(), op_->space->ndof());
  for (int k = 0; k < modes(); ++k) {
    const double s = amplitude * dw(k);
    out.fluid += s * fluid_loads_[k];
    out.structure += s * structure_loads_[k];
  }
  return out;
}

ForcingPair NoiseCoefficient::apply(const NodalField& u, const BeamCoeffs& eta,
                                    const Eigen::VectorXd& dw) const {
  return apply_amplitude(amplitude(u, eta), dw);
}

ForcingPair apply_G(const NoiseCoefficient& g, const NodalField& u, const BeamCoeffs& eta,
                    const Eigen::VectorXd& dw) {
  return g.apply(u, eta, dw);
}

}  // namespace stochfsi
