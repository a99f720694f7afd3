#pragma once
//
// Special functions used by the closed-form posterior moments, WAIC terms
// and predictive probabilities.  Everything here is pure and thread-safe.
//

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace wow {

struct RealTolerance {
  double abs_tol = 1e-12;
  double rel_tol = 1e-10;

  RealTolerance() = default;
  RealTolerance(double abs, double rel);

  // |a - b| <= abs_tol + rel_tol * max(|a|, |b|)
  [[nodiscard]] bool close(double a, double b) const noexcept {
    return std::abs(a - b) <= abs_tol + rel_tol * std::max(std::abs(a), std::abs(b));
  }
};

// Shape pair of a Beta(a, b) distribution.
struct BetaShape {
  double a = 1.0;
  double b = 1.0;

  [[nodiscard]] double mean() const noexcept { return a / (a + b); }
  [[nodiscard]] double variance() const noexcept {
    const double s = a + b;
    return a * b / (s * s * (s + 1.0));
  }
  bool operator==(const BetaShape&) const = default;
};

// Throws DomainError unless a > 0 and b > 0 (and both finite).
void validate(const BetaShape& shape);

// psi(z), z > 0.  Recurrence-shifted to z >= 8, then asymptotic series.
double digamma(double z);

// psi_1(z), z > 0.  Same scheme as digamma.
double trigamma(double z);

// psi(p) - psi(p + q) = -sum_{i=0}^{q-1} 1/(p+i), exact finite sum for
// integer q.  Used as a cross-check path for integer Beta shapes.
double digamma_diff_integer(double p, std::int64_t q);

// psi_1(p) - psi_1(p + q) = sum_{i=0}^{q-1} 1/(p+i)^2.
double trigamma_diff_integer(double p, std::int64_t q);

// ln B(a, b).
double log_beta(double a, double b);

// log of the Beta(a, b) density at u in [0, 1]; -inf at boundaries where the
// density vanishes.
double beta_log_pdf(double u, const BetaShape& shape);

// Regularized incomplete beta I_u(a, b).
double beta_cdf(double u, const BetaShape& shape);

// log[ C(m,k) B(a+k, b+m-k) / B(a,b) ].
double beta_binomial_log_pmf(std::int64_t k, std::int64_t m, const BetaShape& shape);

// log[ C(m,k) p^k (1-p)^(m-k) ] for p in [0, 1].
double binomial_log_pmf(std::int64_t k, std::int64_t m, double p);

// Phi(z).
double normal_cdf(double z);

// log of the N(mean, var) density at y.
double normal_log_pdf(double y, double mean, double var);

// Numerically stable 1 / (1 + exp(-t)).
double logistic(double t);

}  // namespace wow
