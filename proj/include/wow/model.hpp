#pragma once
//
// Conjugate mixture-prior updating for binary (Beta/Bernoulli) and
// continuous (Normal, known sigma) endpoints.
//
// The prior on the control rate is  w_h * pi_h + (1 - w_h) * pi_0  where pi_h
// carries the historical data.  Because both components are conjugate, the
// posterior is again a two-component mixture whose borrow weight w* is
//
//     w* = w_h z_h / (w_h z_h + (1 - w_h) z_0),
//
// with z_h, z_0 the component marginal likelihoods.  Marginal likelihoods are
// carried in log space throughout; B-function ratios underflow long before
// n_h reaches realistic historical sizes.
//

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wow/specfun.hpp"

namespace wow {

struct BinaryDataset {
  std::int64_t x = 0;  // successes
  std::int64_t n = 0;  // sample size
};

struct HistoricalBinary {
  std::int64_t x_h = 0;
  std::int64_t n_h = 0;
};

void validate(const BinaryDataset& data);
void validate(const HistoricalBinary& hist);

// Sufficient statistics of a normal sample: raw power sums up to order four
// (the WAIC variance terms are quartic in y) and the known sampling sd.
struct ContinuousStats {
  std::int64_t n = 0;
  double s1 = 0.0;  // sum y
  double s2 = 0.0;  // sum y^2
  double s3 = 0.0;  // sum y^3
  double s4 = 0.0;  // sum y^4
  double sigma = 1.0;

  [[nodiscard]] double mean() const noexcept { return s1 / static_cast<double>(n); }
  // Unbiased sample standard deviation (n >= 2).
  [[nodiscard]] double sample_sd() const;

  static ContinuousStats from_samples(std::span<const double> y, double sigma);

  // Power sums a sample of size n with mean ybar would have if its higher
  // moments matched the N(ybar, sigma^2) population exactly.
  static ContinuousStats from_population_moments(std::int64_t n, double ybar, double sigma);
};

struct HistoricalContinuous {
  double ybar_h = 0.0;
  double s2_h = 1.0;  // historical variance estimate s^2
  std::int64_t n_h = 1;
  double vague_mean = 0.0;
  double vague_sd = 10.0;

  // Variance of the informative component, s^2 / n_h.
  [[nodiscard]] double informative_variance() const noexcept {
    return s2_h / static_cast<double>(n_h);
  }
  // Message when the vague component is not much wider than the informative
  // one (vague_sd^2 < 10 s^2/n_h).
  [[nodiscard]] std::optional<std::string> vague_prior_warning() const;
};

void validate(const ContinuousStats& data);
void validate(const HistoricalContinuous& hist);

struct NormalShape {
  double mean = 0.0;
  double var = 1.0;
  bool operator==(const NormalShape&) const = default;
};

struct BinaryMixturePosterior {
  double w_star = 0.0;
  BetaShape borrow;    // Beta(a + x + x_h, b + n + n_h - x - x_h)
  BetaShape noborrow;  // Beta(a + x, b + n - x)
  double log_z_h = 0.0;
  double log_z_0 = 0.0;

  [[nodiscard]] double density(double u) const;
  [[nodiscard]] double cdf(double u) const;
  // Inverse cdf by bisection to 1e-8 (or tighter when requested).
  [[nodiscard]] double quantile(double p, double tol = 1e-10) const;
};

struct NormalMixturePosterior {
  double w_star = 0.0;
  double mu_h = 0.0;
  double tau2_h = 1.0;
  double mu_0 = 0.0;
  double tau2_0 = 1.0;
  double log_z_h = 0.0;
  double log_z_0 = 0.0;

  [[nodiscard]] NormalShape borrow() const noexcept { return {mu_h, tau2_h}; }
  [[nodiscard]] NormalShape noborrow() const noexcept { return {mu_0, tau2_0}; }
  [[nodiscard]] double density(double u) const;
  [[nodiscard]] double cdf(double u) const;
  [[nodiscard]] double quantile(double p, double tol = 1e-10) const;
};

// w* from the prior weight and the two log marginal likelihoods.  Exact at
// the boundaries: w_h = 0 gives 0 and w_h = 1 gives 1.
double posterior_weight(double w_h, double log_z_h, double log_z_0);

BinaryMixturePosterior binary_posterior(const BetaShape& prior, const BinaryDataset& data,
                                        const HistoricalBinary& hist, double w_h);

NormalMixturePosterior continuous_posterior(const HistoricalContinuous& hist,
                                            const ContinuousStats& data, double w_h);

// Posterior under a random weight w_h ~ pi(w) depends on pi only through its
// mean, so this is binary_posterior evaluated at that mean.  Kept as its own
// entry point so the reduction is an explicit, testable contract.
BinaryMixturePosterior marginal_posterior_via_weight_prior(const BetaShape& prior,
                                                           const BinaryDataset& data,
                                                           const HistoricalBinary& hist,
                                                           double weight_prior_mean);

double posterior_mean(const BinaryMixturePosterior& post);
double posterior_mean(const NormalMixturePosterior& post);

// Single-component posteriors for the treatment arm (vague prior only).
BetaShape treatment_posterior(const BetaShape& prior, const BinaryDataset& treated);
NormalShape treatment_posterior(double vague_mean, double vague_sd, const ContinuousStats& treated);

// Survival function 1 - F(u) of a Beta distribution tabulated at the shared
// 256-node Gauss-Legendre rule on [0, 1].
class BetaSurvivalGrid {
 public:
  explicit BetaSurvivalGrid(const BetaShape& shape);
  [[nodiscard]] std::span<const double> values() const noexcept { return survival_; }
  [[nodiscard]] const BetaShape& shape() const noexcept { return shape_; }

 private:
  BetaShape shape_;
  std::vector<double> survival_;
};

// P(theta_t > theta) for independent posteriors.  Beta pairs use the
// 256-node Gauss-Legendre rule on [0, 1]; normal pairs the closed form
// Phi((mu_t - mu_c) / sqrt(var_t + var_c)).
double prob_greater(const BetaShape& treat, const BetaShape& control);
double prob_greater(const BetaShape& treat, const BinaryMixturePosterior& control);
double prob_greater(const BetaSurvivalGrid& treat, const BinaryMixturePosterior& control);
double prob_greater(const BinaryMixturePosterior& treat, const BinaryMixturePosterior& control);
double prob_greater(const NormalShape& treat, const NormalShape& control);
double prob_greater(const NormalShape& treat, const NormalMixturePosterior& control);
double prob_greater(const NormalMixturePosterior& treat, const NormalMixturePosterior& control);

}  // namespace wow
