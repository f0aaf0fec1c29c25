#include "stochfsi/spectrum.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace stochfsi {

InterfaceSpectrum::InterfaceSpectrum(double length, int intervals)
    : length_(length), intervals_(intervals) {
  if (intervals < 2) throw ConfigurationError("interface spectrum needs >= 2 intervals");
  const int n = intervals - 1;
  const double h = length / intervals;
  Eigen::MatrixXd stiff = Eigen::MatrixXd::Zero(n, n);
  mass_ = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    stiff(i, i) = 2.0 / h;
    mass_(i, i) = 4.0 * h / 6.0;
    if (i + 1 < n) {
      stiff(i, i + 1) = stiff(i + 1, i) = -1.0 / h;
      mass_(i, i + 1) = mass_(i + 1, i) = h / 6.0;
    }
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(stiff, mass_);
  if (es.info() != Eigen::Success) throw ConfigurationError("interface eigensolve failed");
  gamma_ = es.eigenvalues();
  phi_ = es.eigenvectors();
}

Eigen::VectorXd InterfaceSpectrum::coefficients(const Eigen::VectorXd& interior) const {
  return phi_.transpose() * (mass_ * interior);
}

double InterfaceSpectrum::weighted_norm(const Eigen::VectorXd& interior, double s) const {
  const Eigen::VectorXd c = coefficients(interior);
  double sum = 0.0;
  for (int k = 0; k < c.size(); ++k) sum += std::pow(1.0 + gamma_(k), s) * c(k) * c(k);
  return std::sqrt(sum);
}

double InterfaceSpectrum::weighted_norm(const std::vector<Vec2>& samples, double s) const {
  const int n = intervals_ - 1;
  double sum = 0.0;
  for (int comp = 0; comp < 2; ++comp) {
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) f(i) = samples.at(i + 1)(comp);
    const double v = weighted_norm(f, s);
    sum += v * v;
  }
  return std::sqrt(sum);
}

}  // namespace stochfsi
