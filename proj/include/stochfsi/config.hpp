#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stochfsi/scheme.hpp"

namespace stochfsi {

enum class SweepMode { Product, Diagonal };

struct RunConfig {
  SchemeConfig scheme;
  int paths = 1;
  std::uint64_t seed = 0;
  std::vector<int> sweep_N;
  std::vector<double> sweep_eps;
  SweepMode sweep_mode = SweepMode::Product;
  double beta = 0.25;  ///< exponent of the H^-beta proxy in the time-shift modulus

  /// (N, eps) pairs of the sweep grid.
  std::vector<std::pair<int, double>> sweep_grid() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, malformed
/// values and missing required keys (T, N, eps, delta1, delta2) raise
/// ConfigurationError with the source name and line number.
RunConfig parse_config(std::string_view text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Every key with a round-trippable value, in a fixed order.
std::string canonical_config(const RunConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace stochfsi
