#pragma once

#include <cstddef>
#include <vector>

namespace wow {

// Gauss-Legendre rule mapped to [lo, hi].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Nodes by Newton iteration on P_n; accurate to ~1e-15.
QuadratureRule gauss_legendre(std::size_t order, double lo = 0.0, double hi = 1.0);

// Shared 256-node rule on [0, 1].
const QuadratureRule& unit_gauss_legendre_256();

}  // namespace wow
