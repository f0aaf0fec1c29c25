#pragma once

#include <vector>

namespace stochfsi {

/// Gauss-Legendre rule mapped to [0, 1].
struct GaussRule {
  std::vector<double> points;
  std::vector<double> weights;
};

GaussRule gauss_legendre(int n);

}  // namespace stochfsi
