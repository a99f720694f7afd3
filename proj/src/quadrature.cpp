#include "wow/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "wow/errors.hpp"

namespace wow {

QuadratureRule gauss_legendre(std::size_t order, double lo, double hi) {
  if (order == 0) throw DomainError("gauss_legendre: order must be positive");
  if (!(hi > lo)) throw DomainError("gauss_legendre: need lo < hi");
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const std::size_t half = (order + 1) / 2;
  const double mid = 0.5 * (hi + lo);
  const double len = 0.5 * (hi - lo);
  const double n = static_cast<double>(order);
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0;
      double p2 = 0.0;
      for (std::size_t j = 1; j <= order; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = ((2.0 * jd - 1.0) * z * p2 - (jd - 1.0) * p3) / jd;
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * pp * pp);
    rule.nodes[i] = mid - len * z;
    rule.nodes[order - 1 - i] = mid + len * z;
    rule.weights[i] = len * w;
    rule.weights[order - 1 - i] = len * w;
  }
  return rule;
}

const QuadratureRule& unit_gauss_legendre_256() {
  static const QuadratureRule rule = gauss_legendre(256, 0.0, 1.0);
  return rule;
}

}  // namespace wow
