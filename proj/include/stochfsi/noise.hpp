#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "stochfsi/ale.hpp"
#include "stochfsi/mesh.hpp"
#include "stochfsi/structure.hpp"
#include "stochfsi/types.hpp"

namespace stochfsi {

/// Truncated Wiener process with covariance eigenvalues q_k. Increments are
/// keyed by (seed, step, mode, substream), so any increment can be
/// regenerated without replaying the stream.
struct WienerProcess {
  std::vector<double> q;
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;  ///< next step index used by sample_increment

  int modes() const { return static_cast<int>(q.size()); }
};

/// q_k = k^{-decay}, k = 1..modes.
WienerProcess make_wiener(int modes, double decay, std::uint64_t seed);

/// Increment for step `step`; entry k has variance q_k dt.
Eigen::VectorXd increment_at(const WienerProcess& w, std::uint64_t step, double dt);
/// increment_at(w, w.counter, dt), then advances the counter.
Eigen::VectorXd sample_increment(WienerProcess& w, double dt);

/// Brownian-bridge split of an increment dw over [0, dt] into two halves that
/// sum to dw exactly. `node` identifies the sub-interval in a binary tree
/// (root 1, children 2n and 2n+1).
std::pair<Eigen::VectorXd, Eigen::VectorXd> bridge_split(const WienerProcess& w,
                                                         std::uint64_t step, std::uint32_t node,
                                                         const Eigen::VectorXd& dw, double dt);

/// Load vectors of a force pair: fluid(n, c) = int f_c N_n, structure(j, c) = int g_c phi_j.
struct ForcingPair {
  NodalField fluid;
  BeamCoeffs structure;

  static ForcingPair zero(int nodes, int beam_dofs) {
    return {NodalField::Zero(nodes, 2), BeamCoeffs::Zero(beam_dofs, 2)};
  }
};

/// G(u, eta) e_k = a(u, eta) c mode_k with a = gain (|u|_{L2} + kappa |eta|_{L2}),
/// kappa = min(1, sqrt(lambda_min(K, M))), and c normalizing sum_k q_k |mode_k|^2 c^2 = 1.
/// Mode k: structure part sin(k pi z / L) e_r, fluid part its harmonic extension.
class NoiseCoefficient {
public:
  NoiseCoefficient(const HarmonicExtension& ext, const ElasticOperator& op,
                   std::vector<double> q, double gain);

  int modes() const { return static_cast<int>(q_.size()); }
  double gain() const { return gain_; }
  double kappa() const { return kappa_; }
  double normalization() const { return c_; }
  const std::vector<double>& q() const { return q_; }

  const NodalField& fluid_mode(int k) const { return fluid_modes_[k]; }
  double mode_norm_sq(int k) const { return gram_(k, k); }
  /// Gram matrix of the modes in L2(O) x L2(0, L).
  const Eigen::MatrixXd& gram() const { return gram_; }

  /// a(u, eta) c
  double amplitude(const NodalField& u, const BeamCoeffs& eta) const;
  /// |G(u, eta)|^2 in L_2(U_0; L2 x L2)
  double hs_norm_sq(const NodalField& u, const BeamCoeffs& eta) const;

  ForcingPair apply(const NodalField& u, const BeamCoeffs& eta, const Eigen::VectorXd& dw) const;
  /// Loads of sum_k dw_k mode_k scaled by `amplitude`.
  ForcingPair apply_amplitude(double amplitude, const Eigen::VectorXd& dw) const;

private:
  MeshPtr mesh_;
  const ElasticOperator* op_;
  std::vector<double> q_;
  double gain_, kappa_, c_ = 0.0;
  std::vector<NodalField> fluid_modes_;
  std::vector<NodalField> fluid_loads_;
  std::vector<BeamCoeffs> structure_loads_;
  Eigen::MatrixXd gram_;
};

ForcingPair apply_G(const NoiseCoefficient& g, const NodalField& u, const BeamCoeffs& eta,
                    const Eigen::VectorXd& dw);

/// Load vector int f . N_n e_c of a nodal field (consistent mass times f).
NodalField fluid_load(const ReferenceMesh& mesh, const NodalField& f);

}  // namespace stochfsi
