#include "wow/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wow/errors.hpp"
#include "wow/quadrature.hpp"

namespace wow {

namespace {

void require_weight(double w, const char* what) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw DomainError(std::string(what) + ": weight must lie in [0, 1]");
  }
}

template <class Cdf>
double bisect_quantile(double p, double lo, double hi, double tol, Cdf&& cdf) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile: p must lie in [0, 1]");
  for (int i = 0; i < 400 && hi - lo > tol; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double normal_density(double u, double mean, double var) {
  return std::exp(normal_log_pdf(u, mean, var));
}

double normal_cdf_at(double u, double mean, double var) {
  return normal_cdf((u - mean) / std::sqrt(var));
}

// sum_k w_k f_c(u_k) S_t(u_k) over the unit rule.
double integrate_against_survival(std::span<const double> survival, const BetaShape& control) {
  const auto& rule = unit_gauss_legendre_256();
  const double lb = log_beta(control.a, control.b);
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double u = rule.nodes[k];
    const double log_f = (control.a - 1.0) * std::log(u) + (control.b - 1.0) * std::log1p(-u) - lb;
    acc += rule.weights[k] * std::exp(log_f) * survival[k];
  }
  return std::clamp(acc, 0.0, 1.0);
}

}  // namespace

void validate(const BinaryDataset& data) {
  if (data.n < 1) throw DomainError("BinaryDataset: n must be >= 1");
  if (data.x < 0 || data.x > data.n) throw DomainError("BinaryDataset: need 0 <= x <= n");
}

void validate(const HistoricalBinary& hist) {
  if (hist.n_h < 1) throw DomainError("HistoricalBinary: n_h must be >= 1");
  if (hist.x_h < 0) throw DomainError("HistoricalBinary: x_h must be >= 0");
  if (hist.x_h > hist.n_h) throw DomainError("HistoricalBinary: x_h exceeds n_h");
}

void validate(const ContinuousStats& data) {
  if (data.n < 1) throw DomainError("ContinuousStats: n must be >= 1");
  if (!(data.sigma > 0.0) || !std::isfinite(data.sigma)) {
    throw DomainError("ContinuousStats: sigma must be positive");
  }
  const double n = static_cast<double>(data.n);
  // Cauchy-Schwarz, with relative slack for rounding in the accumulated sums.
  const double slack1 = 1e-9 * std::max(1.0, data.s1 * data.s1);
  const double slack2 = 1e-9 * std::max(1.0, data.s2 * data.s2);
  if (data.s2 * n + slack1 < data.s1 * data.s1) {
    throw DomainError("ContinuousStats: power sums violate n*s2 >= s1^2");
  }
  if (data.s4 * n + slack2 < data.s2 * data.s2) {
    throw DomainError("ContinuousStats: power sums violate n*s4 >= s2^2");
  }
}

void validate(const HistoricalContinuous& hist) {
  if (hist.n_h < 1) throw DomainError("HistoricalContinuous: n_h must be >= 1");
  if (!(hist.s2_h > 0.0)) throw DomainError("HistoricalContinuous: s2_h must be positive");
  if (!(hist.vague_sd > 0.0)) throw DomainError("HistoricalContinuous: vague_sd must be positive");
  if (!std::isfinite(hist.ybar_h) || !std::isfinite(hist.vague_mean)) {
    throw DomainError("HistoricalContinuous: means must be finite");
  }
}

double ContinuousStats::sample_sd() const {
  if (n < 2) throw DomainError("ContinuousStats::sample_sd: need n >= 2");
  const double nd = static_cast<double>(n);
  const double ss = std::max(0.0, s2 - s1 * s1 / nd);
  return std::sqrt(ss / (nd - 1.0));
}

ContinuousStats ContinuousStats::from_samples(std::span<const double> y, double sigma) {
  ContinuousStats out;
  out.n = static_cast<std::int64_t>(y.size());
  out.sigma = sigma;
  for (double v : y) {
    const double v2 = v * v;
    out.s1 += v;
    out.s2 += v2;
    out.s3 += v2 * v;
    out.s4 += v2 * v2;
  }
  return out;
}

ContinuousStats ContinuousStats::from_population_moments(std::int64_t n, double ybar, double sigma) {
  const double nd = static_cast<double>(n);
  const double m2 = ybar * ybar;
  const double v = sigma * sigma;
  ContinuousStats out;
  out.n = n;
  out.sigma = sigma;
  out.s1 = nd * ybar;
  out.s2 = nd * (v + m2);
  out.s3 = nd * (m2 * ybar + 3.0 * ybar * v);
  out.s4 = nd * (m2 * m2 + 6.0 * m2 * v + 3.0 * v * v);
  return out;
}

std::optional<std::string> HistoricalContinuous::vague_prior_warning() const {
  const double vague_var = vague_sd * vague_sd;
  if (vague_var < 10.0 * informative_variance()) {
    std::ostringstream os;
    os << "vague component variance " << vague_var
       << " is less than 10x the informative variance " << informative_variance();
    return os.str();
  }
  return std::nullopt;
}

double BinaryMixturePosterior::density(double u) const {
  if (!(u >= 0.0 && u <= 1.0)) return 0.0;
  double d = 0.0;
  if (w_star > 0.0) d += w_star * std::exp(beta_log_pdf(u, borrow));
  if (w_star < 1.0) d += (1.0 - w_star) * std::exp(beta_log_pdf(u, noborrow));
  return d;
}

double BinaryMixturePosterior::cdf(double u) const {
  u = std::clamp(u, 0.0, 1.0);
  double c = 0.0;
  if (w_star > 0.0) c += w_star * beta_cdf(u, borrow);
  if (w_star < 1.0) c += (1.0 - w_star) * beta_cdf(u, noborrow);
  return c;
}

double BinaryMixturePosterior::quantile(double p, double tol) const {
  return bisect_quantile(p, 0.0, 1.0, tol, [this](double u) { return cdf(u); });
}

double NormalMixturePosterior::density(double u) const {
  return w_star * normal_density(u, mu_h, tau2_h) + (1.0 - w_star) * normal_density(u, mu_0, tau2_0);
}

double NormalMixturePosterior::cdf(double u) const {
  return w_star * normal_cdf_at(u, mu_h, tau2_h) + (1.0 - w_star) * normal_cdf_at(u, mu_0, tau2_0);
}

double NormalMixturePosterior::quantile(double p, double tol) const {
  const double spread = 40.0 * std::sqrt(std::max(tau2_h, tau2_0));
  const double lo = std::min(mu_h, mu_0) - spread;
  const double hi = std::max(mu_h, mu_0) + spread;
  return bisect_quantile(p, lo, hi, tol, [this](double u) { return cdf(u); });
}

double posterior_weight(double w_h, double log_z_h, double log_z_0) {
  require_weight(w_h, "posterior_weight");
  if (w_h == 0.0) return 0.0;
  if (w_h == 1.0) return 1.0;
  return logistic(std::log(w_h) - std::log1p(-w_h) + log_z_h - log_z_0);
}

BinaryMixturePosterior binary_posterior(const BetaShape& prior, const BinaryDataset& data,
                                        const HistoricalBinary& hist, double w_h) {
  validate(prior);
  validate(data);
  validate(hist);
  require_weight(w_h, "binary_posterior");
  const double x = static_cast<double>(data.x);
  const double n = static_cast<double>(data.n);
  const double xh = static_cast<double>(hist.x_h);
  const double nh = static_cast<double>(hist.n_h);

  BinaryMixturePosterior post;
  post.borrow = {prior.a + x + xh, prior.b + n + nh - x - xh};
  post.noborrow = {prior.a + x, prior.b + n - x};
  // The binomial coefficient is common to both marginals and cancels.
  post.log_z_h = log_beta(post.borrow.a, post.borrow.b) - log_beta(prior.a + xh, prior.b + nh - xh);
  post.log_z_0 = log_beta(post.noborrow.a, post.noborrow.b) - log_beta(prior.a, prior.b);
  post.w_star = posterior_weight(w_h, post.log_z_h, post.log_z_0);
  return post;
}

NormalMixturePosterior continuous_posterior(const HistoricalContinuous& hist,
                                            const ContinuousStats& data, double w_h) {
  validate(hist);
  validate(data);
  require_weight(w_h, "continuous_posterior");
  const double n = static_cast<double>(data.n);
  const double ybar = data.mean();
  const double lik_prec = n / (data.sigma * data.sigma);
  const double var_h = hist.informative_variance();
  const double var_0 = hist.vague_sd * hist.vague_sd;

  NormalMixturePosterior post;
  post.tau2_h = 1.0 / (1.0 / var_h + lik_prec);
  post.mu_h = post.tau2_h * (hist.ybar_h / var_h + lik_prec * ybar);
  post.tau2_0 = 1.0 / (1.0 / var_0 + lik_prec);
  post.mu_0 = post.tau2_0 * (hist.vague_mean / var_0 + lik_prec * ybar);

  const double se2 = 1.0 / lik_prec;
  post.log_z_h = normal_log_pdf(ybar, hist.ybar_h, var_h + se2);
  post.log_z_0 = normal_log_pdf(ybar, hist.vague_mean, var_0 + se2);
  post.w_star = posterior_weight(w_h, post.log_z_h, post.log_z_0);
  return post;
}

BinaryMixturePosterior marginal_posterior_via_weight_prior(const BetaShape& prior,
                                                           const BinaryDataset& data,
                                                           const HistoricalBinary& hist,
                                                           double weight_prior_mean) {
  return binary_posterior(prior, data, hist, weight_prior_mean);
}

double posterior_mean(const BinaryMixturePosterior& post) {
  return post.w_star * post.borrow.mean() + (1.0 - post.w_star) * post.noborrow.mean();
}

double posterior_mean(const NormalMixturePosterior& post) {
  return post.w_star * post.mu_h + (1.0 - post.w_star) * post.mu_0;
}

BetaShape treatment_posterior(const BetaShape& prior, const BinaryDataset& treated) {
  validate(prior);
  validate(treated);
  return {prior.a + static_cast<double>(treated.x),
          prior.b + static_cast<double>(treated.n - treated.x)};
}

NormalShape treatment_posterior(double vague_mean, double vague_sd, const ContinuousStats& treated) {
  validate(treated);
  if (!(vague_sd > 0.0)) throw DomainError("treatment_posterior: vague_sd must be positive");
  const double lik_prec = static_cast<double>(treated.n) / (treated.sigma * treated.sigma);
  const double var0 = vague_sd * vague_sd;
  const double var = 1.0 / (1.0 / var0 + lik_prec);
  return {var * (vague_mean / var0 + lik_prec * treated.mean()), var};
}

BetaSurvivalGrid::BetaSurvivalGrid(const BetaShape& shape) : shape_(shape) {
  validate(shape);
  const auto& rule = unit_gauss_legendre_256();
  survival_.resize(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    survival_[k] = 1.0 - beta_cdf(rule.nodes[k], shape);
  }
}

double prob_greater(const BetaShape& treat, const BetaShape& control) {
  validate(control);
  return integrate_against_survival(BetaSurvivalGrid(treat).values(), control);
}

double prob_greater(const BetaSurvivalGrid& treat, const BinaryMixturePosterior& control) {
  double p = 0.0;
  if (control.w_star > 0.0) {
    p += control.w_star * integrate_against_survival(treat.values(), control.borrow);
  }
  if (control.w_star < 1.0) {
    p += (1.0 - control.w_star) * integrate_against_survival(treat.values(), control.noborrow);
  }
  return std::clamp(p, 0.0, 1.0);
}

double prob_greater(const BetaShape& treat, const BinaryMixturePosterior& control) {
  return prob_greater(BetaSurvivalGrid(treat), control);
}

double prob_greater(const BinaryMixturePosterior& treat, const BinaryMixturePosterior& control) {
  double p = 0.0;
  if (treat.w_star > 0.0) p += treat.w_star * prob_greater(treat.borrow, control);
  if (treat.w_star < 1.0) p += (1.0 - treat.w_star) * prob_greater(treat.noborrow, control);
  return std::clamp(p, 0.0, 1.0);
}

double prob_greater(const NormalShape& treat, const NormalShape& control) {
  if (!(treat.var > 0.0) || !(control.var > 0.0)) {
    throw DomainError("prob_greater: variances must be positive");
  }
  return normal_cdf((treat.mean - control.mean) / std::sqrt(treat.var + control.var));
}

double prob_greater(const NormalShape& treat, const NormalMixturePosterior& control) {
  return control.w_star * prob_greater(treat, control.borrow()) +
         (1.0 - control.w_star) * prob_greater(treat, control.noborrow());
}

double prob_greater(const NormalMixturePosterior& treat, const NormalMixturePosterior& control) {
  return treat.w_star * prob_greater(treat.borrow(), control) +
         (1.0 - treat.w_star) * prob_greater(treat.noborrow(), control);
}

}  // namespace wow
