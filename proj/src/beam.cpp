#include "stochfsi/beam.hpp"

#include <algorithm>
#include <cmath>

#include "stochfsi/quadrature.hpp"

namespace stochfsi {

BeamSpace::BeamSpace(double length, int elements) : length_(length), ne_(elements) {
  if (elements < 2) throw ConfigurationError("beam needs at least 2 elements");
  if (!(length > 0.0)) throw ConfigurationError("beam length must be positive");
}

int BeamSpace::dof(int e, int a) const {
  const int node = e + a / 2;
  if (node == 0 || node == ne_) return -1;
  return 2 * (node - 1) + (a % 2);
}

int BeamSpace::element_of(double z) const {
  const int e = static_cast<int>(std::floor(z / h()));
  return std::clamp(e, 0, ne_ - 1);
}

std::array<double, 4> BeamSpace::shape(int e, double z, int order) const {
  const double hh = h();
  const double t = (z - e * hh) / hh;
  switch (order) {
    case 0:
      return {1 - 3 * t * t + 2 * t * t * t, hh * (t - 2 * t * t + t * t * t),
              3 * t * t - 2 * t * t * t, hh * (-t * t + t * t * t)};
    case 1:
      return {(-6 * t + 6 * t * t) / hh, 1 - 4 * t + 3 * t * t, (6 * t - 6 * t * t) / hh,
              -2 * t + 3 * t * t};
    case 2:
      return {(-6 + 12 * t) / (hh * hh), (-4 + 6 * t) / hh, (6 - 12 * t) / (hh * hh),
              (-2 + 6 * t) / hh};
    case 3:
      return {12 / (hh * hh * hh), 6 / (hh * hh), -12 / (hh * hh * hh), 6 / (hh * hh)};
    default:
      return {0, 0, 0, 0};
  }
}

Vec2 BeamSpace::evaluate(const BeamCoeffs& c, double z, int order) const {
  const int e = element_of(z);
  const auto s = shape(e, z, order);
  Vec2 out = Vec2::Zero();
  for (int a = 0; a < 4; ++a) {
    const int d = dof(e, a);
    if (d >= 0) out += s[a] * c.row(d).transpose();
  }
  return out;
}

double BeamSpace::evaluate(const Eigen::VectorXd& c, double z, int order) const {
  const int e = element_of(z);
  const auto s = shape(e, z, order);
  double out = 0.0;
  for (int a = 0; a < 4; ++a) {
    const int d = dof(e, a);
    if (d >= 0) out += s[a] * c(d);
  }
  return out;
}

Eigen::SparseMatrix<double> BeamSpace::evaluation_matrix(const std::vector<double>& z,
                                                         int order) const {
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t q = 0; q < z.size(); ++q) {
    const int e = element_of(z[q]);
    const auto s = shape(e, z[q], order);
    for (int a = 0; a < 4; ++a) {
      const int d = dof(e, a);
      if (d >= 0 && s[a] != 0.0) t.emplace_back(static_cast<int>(q), d, s[a]);
    }
  }
  Eigen::SparseMatrix<double> m(static_cast<int>(z.size()), ndof());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

BeamCoeffs BeamSpace::interpolate(const std::function<Vec2(double)>& f,
                                  const std::function<Vec2(double)>& df) const {
  BeamCoeffs c(ndof(), 2);
  for (int i = 1; i < ne_; ++i) {
    c.row(2 * (i - 1)) = f(i * h()).transpose();
    c.row(2 * (i - 1) + 1) = df(i * h()).transpose();
  }
  return c;
}

BeamCoeffs BeamSpace::load(const std::function<Vec2(double)>& f, int points_per_element) const {
  const GaussRule g = gauss_legendre(points_per_element);
  BeamCoeffs out = BeamCoeffs::Zero(ndof(), 2);
  for (int e = 0; e < ne_; ++e)
    for (std::size_t k = 0; k < g.points.size(); ++k) {
      const double z = (e + g.points[k]) * h();
      const Vec2 fz = f(z);
      const auto s = shape(e, z, 0);
      for (int a = 0; a < 4; ++a) {
        const int d = dof(e, a);
        if (d >= 0) out.row(d) += g.weights[k] * h() * s[a] * fz.transpose();
      }
    }
  return out;
}

Eigen::SparseMatrix<double> BeamSpace::assemble(int order) const {
  // 4 points integrate the degree-6 mass integrand exactly.
  const GaussRule g = gauss_legendre(4);
  std::vector<Eigen::Triplet<double>> t;
  for (int e = 0; e < ne_; ++e)
    for (std::size_t k = 0; k < g.points.size(); ++k) {
      const double z = (e + g.points[k]) * h();
      const auto s = shape(e, z, order);
      const double w = g.weights[k] * h();
      for (int a = 0; a < 4; ++a) {
        const int da = dof(e, a);
        if (da < 0) continue;
        for (int b = 0; b < 4; ++b) {
          const int db = dof(e, b);
          if (db >= 0) t.emplace_back(da, db, w * s[a] * s[b]);
        }
      }
    }
  Eigen::SparseMatrix<double> m(ndof(), ndof());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::SparseMatrix<double> BeamSpace::mass() const { return assemble(0); }
Eigen::SparseMatrix<double> BeamSpace::bending() const { return assemble(2); }

}  // namespace stochfsi
