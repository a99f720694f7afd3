#pragma once
//
// Closed-form WAIC on two-component mixture posteriors and the gate built on
// it.  WAIC here is
//
//     WAIC = -2 sum_i E[log f(y_i | theta)] + 2 sum_i Var[log f(y_i | theta)]
//
// with E/Var under the mixture posterior.  Writing d_i = E_h,i - E_0,i the
// mixture algebra gives, exactly,
//
//     E_i   = E_0,i + w* d_i
//     Var_i = w* V_h,i + (1 - w*) V_0,i + w* (1 - w*) d_i^2
//
// so WAIC is a concave quadratic in w* with leading coefficient
// -2 sum_i d_i^2 and its minimum over [0, 1] sits at w* = 0 or w* = 1.  The
// gate therefore only needs k = WAIC(1) - WAIC(0); k <= 0 means borrow.
//

#include <cstdint>
#include <string>
#include <vector>

#include "wow/model.hpp"

namespace wow {

struct WaicValue {
  double total = 0.0;
  double fit_term = 0.0;      // -2 sum E log f
  double penalty_term = 0.0;  // 2 sum Var log f
};

// WAIC(w*) = quad * w*^2 + lin * w* + constant, quad <= 0.
struct WaicQuadratic {
  double quad = 0.0;
  double lin = 0.0;
  double constant = 0.0;

  [[nodiscard]] double operator()(double w_star) const noexcept {
    return (quad * w_star + lin) * w_star + constant;
  }
  // WAIC(1) - WAIC(0).
  [[nodiscard]] double k() const noexcept { return quad + lin; }
};

struct GateDecision {
  bool borrow = false;
  WaicValue waic0;
  WaicValue waic1;
  double k = 0.0;  // waic1.total - waic0.total
};

struct BorrowingRegionBinary {
  std::int64_t x_lower = -1;
  std::int64_t x_upper = -1;
  bool empty = true;
  // False only for non-Beta(1,1) priors whose borrow set came out disjoint;
  // x_lower/x_upper then bound the set.
  bool connected = true;
  std::string diagnostic;

  [[nodiscard]] bool contains(std::int64_t x) const noexcept {
    return !empty && x >= x_lower && x <= x_upper;
  }
};

struct BorrowingRegionContinuous {
  double ybar_lower = 0.0;
  double ybar_upper = 0.0;
  double sigma = 1.0;
  bool empty = true;
  int sign_changes = 0;
  std::string diagnostic;

  [[nodiscard]] bool contains(double ybar) const noexcept {
    return !empty && ybar >= ybar_lower && ybar <= ybar_upper;
  }
};

// Component log-moments of theta ~ Beta(a, b).
struct BetaLogMoments {
  double e_log = 0.0;      // E log theta
  double e_log1m = 0.0;    // E log(1 - theta)
  double var_log = 0.0;    // Var log theta
  double var_log1m = 0.0;  // Var log(1 - theta)
};

// Via digamma/trigamma; any positive shapes.
BetaLogMoments beta_log_moments(const BetaShape& shape);
// Via the exact finite sums; both shapes must be integers.
BetaLogMoments beta_log_moments_finite_sums(const BetaShape& shape);

// ---- binary -------------------------------------------------------------

WaicValue waic_binary(const BetaShape& prior, const BinaryDataset& data,
                      const HistoricalBinary& hist, double w_h);

WaicQuadratic waic_binary_quadratic(const BetaShape& prior, const BinaryDataset& data,
                                    const HistoricalBinary& hist);

// Same coefficients assembled from the finite-sum moments and the explicit
// I1/I2 expressions; requires integer prior shapes.
WaicQuadratic waic_binary_quadratic_finite_sums(const BetaShape& prior, const BinaryDataset& data,
                                                const HistoricalBinary& hist);

// k(x) = WAIC(w=1) - WAIC(w=0).
double k_binary(const BetaShape& prior, std::int64_t x, std::int64_t n, const HistoricalBinary& hist);

// k evaluated at a real-valued success count (digamma form), used to probe
// the interior point x~ = x_h (n + a + b) / n_h - a.
double k_binary_real(const BetaShape& prior, double x, std::int64_t n, const HistoricalBinary& hist);

// Interior point x~ and the admissible range [a n_h/(n+a+b), (n+a) n_h/(n+a+b)].
struct InteriorPoint {
  double x_tilde = 0.0;
  double xh_min = 0.0;
  double xh_max = 0.0;
  [[nodiscard]] bool admissible(double x_h) const noexcept { return x_h >= xh_min && x_h <= xh_max; }
};
InteriorPoint interior_point(const BetaShape& prior, std::int64_t n, const HistoricalBinary& hist);

struct RegionRow {
  std::int64_t x = 0;
  double waic0 = 0.0;
  double waic1 = 0.0;
  double k = 0.0;
  bool borrow = false;
};

// One row per x = 0..n.
std::vector<RegionRow> region_table_binary(const BetaShape& prior, std::int64_t n,
                                           const HistoricalBinary& hist);

// Exhaustive scan of x = 0..n.  Throws IntegrityError when the borrow set is
// disconnected under Beta(1,1); other priors get a diagnostic instead.
BorrowingRegionBinary borrowing_region_binary(const BetaShape& prior, std::int64_t n,
                                              const HistoricalBinary& hist);

GateDecision gate_binary(const BetaShape& prior, const BinaryDataset& data,
                         const HistoricalBinary& hist);

// ---- continuous ---------------------------------------------------------

WaicValue waic_continuous(const HistoricalContinuous& hist, const ContinuousStats& data, double w_h);

WaicQuadratic waic_continuous_quadratic(const HistoricalContinuous& hist, const ContinuousStats& data);

// Independent assembly from E[f], E[f^2] and the E_h E_0 cross term, each
// expanded into the raw power sums s1..s4.  Agrees with waic_continuous up
// to rounding in the quartic terms.
WaicValue waic_continuous_raw_moments(const HistoricalContinuous& hist, const ContinuousStats& data,
                                      double w_h);

// k as a function of a prospective sample mean, with the higher power sums
// closed at their N(ybar, sigma^2) population values.
double k_continuous_prospective(const HistoricalContinuous& hist, std::int64_t n, double sigma,
                                double ybar);

// Sign changes of k located on a 2001-point grid over ybar_h +- 10 vague_sd,
// then refined by bisection.
BorrowingRegionContinuous borrowing_region_continuous(const HistoricalContinuous& hist,
                                                      std::int64_t n, double sigma);

// Retrospective gate on the observed power sums.
GateDecision gate_continuous(const HistoricalContinuous& hist, const ContinuousStats& data);

}  // namespace wow
