#include "wow/waic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "wow/errors.hpp"

namespace wow {

namespace {

// Per-outcome-type contribution: `count` observations sharing the same
// log-likelihood moments under each component.
struct TermMoments {
  double count = 0.0;
  double e_h = 0.0;
  double e_0 = 0.0;
  double v_h = 0.0;
  double v_0 = 0.0;
};

void accumulate(WaicQuadratic& q, const TermMoments& t) {
  const double d = t.e_h - t.e_0;
  q.quad += -2.0 * t.count * d * d;
  q.lin += 2.0 * t.count * (t.v_h - t.v_0 + d * d - d);
  q.constant += t.count * (-2.0 * t.e_0 + 2.0 * t.v_0);
}

WaicValue evaluate(const TermMoments& t, double w, WaicValue acc) {
  const double d = t.e_h - t.e_0;
  const double e = t.e_0 + w * d;
  const double v = w * t.v_h + (1.0 - w) * t.v_0 + w * (1.0 - w) * d * d;
  acc.fit_term += -2.0 * t.count * e;
  acc.penalty_term += 2.0 * t.count * v;
  acc.total = acc.fit_term + acc.penalty_term;
  return acc;
}

bool is_integer(double v) { return std::floor(v) == v; }

struct BinaryTerms {
  TermMoments success;  // y = 1: log theta
  TermMoments failure;  // y = 0: log(1 - theta)
};

BinaryTerms binary_terms(const BetaShape& borrow, const BetaShape& noborrow, double x, double n,
                         bool finite_sums) {
  const BetaLogMoments mh = finite_sums ? beta_log_moments_finite_sums(borrow) : beta_log_moments(borrow);
  const BetaLogMoments m0 =
      finite_sums ? beta_log_moments_finite_sums(noborrow) : beta_log_moments(noborrow);
  BinaryTerms t;
  t.success = {x, mh.e_log, m0.e_log, mh.var_log, m0.var_log};
  t.failure = {n - x, mh.e_log1m, m0.e_log1m, mh.var_log1m, m0.var_log1m};
  return t;
}

BinaryTerms binary_terms_real(const BetaShape& prior, double x, double n, double xh, double nh) {
  const BetaShape borrow{prior.a + x + xh, prior.b + n + nh - x - xh};
  const BetaShape noborrow{prior.a + x, prior.b + n - x};
  return binary_terms(borrow, noborrow, x, n, false);
}

WaicQuadratic quadratic_from(const BinaryTerms& t) {
  WaicQuadratic q;
  accumulate(q, t.success);
  accumulate(q, t.failure);
  return q;
}

// ---- continuous helpers ----

// sum_i (y_i - m)^2
double central2(const ContinuousStats& s, double m) {
  const double n = static_cast<double>(s.n);
  return s.s2 - 2.0 * m * s.s1 + n * m * m;
}

// sum_i (y_i - m)^4
double central4(const ContinuousStats& s, double m) {
  const double n = static_cast<double>(s.n);
  const double m2 = m * m;
  return s.s4 - 4.0 * m * s.s3 + 6.0 * m2 * s.s2 - 4.0 * m2 * m * s.s1 + n * m2 * m2;
}

// sum_i (y_i - m1)^2 (y_i - m2)^2
double cross22(const ContinuousStats& s, double m1, double m2) {
  const double n = static_cast<double>(s.n);
  return s.s4 - 2.0 * (m1 + m2) * s.s3 + (m1 * m1 + m2 * m2 + 4.0 * m1 * m2) * s.s2 -
         2.0 * m1 * m2 * (m1 + m2) * s.s1 + n * m1 * m1 * m2 * m2;
}

double log_norm_const(double sigma) { return -0.5 * std::log(2.0 * std::numbers::pi * sigma * sigma); }

// Quadratic coefficients from summed quantities: sum E_h, sum E_0, sum V_h,
// sum V_0 and sum d_i^2.
WaicQuadratic quadratic_from_sums(double sum_eh, double sum_e0, double sum_vh, double sum_v0,
                                  double sum_d2) {
  WaicQuadratic q;
  q.quad = -2.0 * sum_d2;
  q.lin = 2.0 * (sum_vh - sum_v0 + sum_d2 - (sum_eh - sum_e0));
  q.constant = -2.0 * sum_e0 + 2.0 * sum_v0;
  return q;
}

WaicValue value_from_sums(double sum_eh, double sum_e0, double sum_vh, double sum_v0, double sum_d2,
                          double w) {
  WaicValue out;
  out.fit_term = -2.0 * (sum_e0 + w * (sum_eh - sum_e0));
  out.penalty_term = 2.0 * (w * sum_vh + (1.0 - w) * sum_v0 + w * (1.0 - w) * sum_d2);
  out.total = out.fit_term + out.penalty_term;
  return out;
}

struct ContinuousSums {
  double eh, e0, vh, v0, d2;
};

ContinuousSums continuous_sums(const NormalMixturePosterior& post, const ContinuousStats& data) {
  const double n = static_cast<double>(data.n);
  const double s2 = data.sigma * data.sigma;
  const double L = log_norm_const(data.sigma);
  const double beta = -1.0 / (2.0 * s2);
  const double alpha_h = L - post.tau2_h / (2.0 * s2);
  const double alpha_0 = L - post.tau2_0 / (2.0 * s2);

  ContinuousSums out{};
  out.eh = n * alpha_h + beta * central2(data, post.mu_h);
  out.e0 = n * alpha_0 + beta * central2(data, post.mu_0);
  // Var[(y - theta)^2] = 2 tau^4 + 4 (y - mu)^2 tau^2, scaled by 1/(4 sigma^4).
  const double s4 = s2 * s2;
  out.vh = (2.0 * n * post.tau2_h * post.tau2_h + 4.0 * post.tau2_h * central2(data, post.mu_h)) / (4.0 * s4);
  out.v0 = (2.0 * n * post.tau2_0 * post.tau2_0 + 4.0 * post.tau2_0 * central2(data, post.mu_0)) / (4.0 * s4);
  // d_i = E_h,i - E_0,i is linear in y_i: c0 + c1 y_i.
  const double c1 = (post.mu_h - post.mu_0) / s2;
  const double c0 = alpha_h - alpha_0 + beta * (post.mu_h * post.mu_h - post.mu_0 * post.mu_0);
  out.d2 = n * c0 * c0 + 2.0 * c0 * c1 * data.s1 + c1 * c1 * data.s2;
  return out;
}

int sign_of(double k) { return k <= 0.0 ? -1 : 1; }

}  // namespace

BetaLogMoments beta_log_moments(const BetaShape& shape) {
  validate(shape);
  const double psi_sum = digamma(shape.a + shape.b);
  const double tri_sum = trigamma(shape.a + shape.b);
  return {digamma(shape.a) - psi_sum, digamma(shape.b) - psi_sum, trigamma(shape.a) - tri_sum,
          trigamma(shape.b) - tri_sum};
}

BetaLogMoments beta_log_moments_finite_sums(const BetaShape& shape) {
  validate(shape);
  if (!is_integer(shape.a) || !is_integer(shape.b)) {
    throw DomainError("beta_log_moments_finite_sums: shapes must be integers");
  }
  const auto ia = static_cast<std::int64_t>(shape.a);
  const auto ib = static_cast<std::int64_t>(shape.b);
  return {digamma_diff_integer(shape.a, ib), digamma_diff_integer(shape.b, ia),
          trigamma_diff_integer(shape.a, ib), trigamma_diff_integer(shape.b, ia)};
}

WaicValue waic_binary(const BetaShape& prior, const BinaryDataset& data,
                      const HistoricalBinary& hist, double w_h) {
  const BinaryMixturePosterior post = binary_posterior(prior, data, hist, w_h);
  const BinaryTerms t = binary_terms(post.borrow, post.noborrow, static_cast<double>(data.x),
                                     static_cast<double>(data.n), false);
  WaicValue out;
  out = evaluate(t.success, post.w_star, out);
  out = evaluate(t.failure, post.w_star, out);
  return out;
}

WaicQuadratic waic_binary_quadratic(const BetaShape& prior, const BinaryDataset& data,
                                    const HistoricalBinary& hist) {
  const BinaryMixturePosterior post = binary_posterior(prior, data, hist, 0.0);
  return quadratic_from(binary_terms(post.borrow, post.noborrow, static_cast<double>(data.x),
                                     static_cast<double>(data.n), false));
}

WaicQuadratic waic_binary_quadratic_finite_sums(const BetaShape& prior, const BinaryDataset& data,
                                                const HistoricalBinary& hist) {
  const BinaryMixturePosterior post = binary_posterior(prior, data, hist, 0.0);
  const BetaLogMoments mh = beta_log_moments_finite_sums(post.borrow);
  const BetaLogMoments m0 = beta_log_moments_finite_sums(post.noborrow);
  const double x = static_cast<double>(data.x);
  const double nx = static_cast<double>(data.n - data.x);

  const double d_fail = mh.e_log1m - m0.e_log1m;
  const double d_succ = mh.e_log - m0.e_log;
  const double i1 = 2.0 * (nx * d_fail * d_fail + x * d_succ * d_succ);
  const double i2 = 2.0 * nx * (mh.var_log1m - m0.var_log1m + d_fail * d_fail + m0.e_log1m - mh.e_log1m) +
                    2.0 * x * (mh.var_log - m0.var_log + d_succ * d_succ + m0.e_log - mh.e_log);
  const double i3 = nx * (-2.0 * m0.e_log1m + 2.0 * m0.var_log1m) + x * (-2.0 * m0.e_log + 2.0 * m0.var_log);
  return {-i1, i2, i3};
}

double k_binary(const BetaShape& prior, std::int64_t x, std::int64_t n, const HistoricalBinary& hist) {
  return waic_binary_quadratic(prior, BinaryDataset{x, n}, hist).k();
}

double k_binary_real(const BetaShape& prior, double x, std::int64_t n, const HistoricalBinary& hist) {
  validate(prior);
  validate(hist);
  const double nd = static_cast<double>(n);
  if (n < 1 || !(x >= 0.0 && x <= nd)) throw DomainError("k_binary_real: need 0 <= x <= n");
  return quadratic_from(binary_terms_real(prior, x, nd, static_cast<double>(hist.x_h),
                                          static_cast<double>(hist.n_h)))
      .k();
}

InteriorPoint interior_point(const BetaShape& prior, std::int64_t n, const HistoricalBinary& hist) {
  validate(prior);
  validate(hist);
  const double nd = static_cast<double>(n);
  const double nh = static_cast<double>(hist.n_h);
  const double denom = nd + prior.a + prior.b;
  InteriorPoint p;
  p.x_tilde = static_cast<double>(hist.x_h) * denom / nh - prior.a;
  p.xh_min = prior.a * nh / denom;
  p.xh_max = (nd + prior.a) * nh / denom;
  return p;
}

std::vector<RegionRow> region_table_binary(const BetaShape& prior, std::int64_t n,
                                           const HistoricalBinary& hist) {
  validate(prior);
  validate(hist);
  if (n < 1) throw DomainError("region_table_binary: n must be >= 1");
  std::vector<RegionRow> rows;
  rows.reserve(static_cast<std::size_t>(n + 1));
  for (std::int64_t x = 0; x <= n; ++x) {
    const WaicQuadratic q = waic_binary_quadratic(prior, BinaryDataset{x, n}, hist);
    RegionRow r;
    r.x = x;
    r.waic0 = q(0.0);
    r.waic1 = q(1.0);
    r.k = q.k();
    r.borrow = r.k <= 0.0;
    rows.push_back(r);
  }
  return rows;
}

BorrowingRegionBinary borrowing_region_binary(const BetaShape& prior, std::int64_t n,
                                              const HistoricalBinary& hist) {
  const auto rows = region_table_binary(prior, n, hist);
  BorrowingRegionBinary region;
  std::int64_t count = 0;
  for (const auto& r : rows) {
    if (!r.borrow) continue;
    if (region.empty) {
      region.x_lower = r.x;
      region.empty = false;
    }
    region.x_upper = r.x;
    ++count;
  }
  if (region.empty) {
    region.diagnostic = "borrow set is empty";
    return region;
  }
  if (count != region.x_upper - region.x_lower + 1) {
    std::ostringstream os;
    os << "borrow set is disconnected: " << count << " borrowing outcomes within [" << region.x_lower
       << ", " << region.x_upper << "]";
    if (prior.a == 1.0 && prior.b == 1.0) throw IntegrityError(os.str());
    region.connected = false;
    region.diagnostic = os.str();
  }
  return region;
}

GateDecision gate_binary(const BetaShape& prior, const BinaryDataset& data,
                         const HistoricalBinary& hist) {
  GateDecision g;
  g.waic0 = waic_binary(prior, data, hist, 0.0);
  g.waic1 = waic_binary(prior, data, hist, 1.0);
  g.k = g.waic1.total - g.waic0.total;
  g.borrow = g.k <= 0.0;
  return g;
}

WaicValue waic_continuous(const HistoricalContinuous& hist, const ContinuousStats& data, double w_h) {
  const NormalMixturePosterior post = continuous_posterior(hist, data, w_h);
  const ContinuousSums s = continuous_sums(post, data);
  return value_from_sums(s.eh, s.e0, s.vh, s.v0, s.d2, post.w_star);
}

WaicQuadratic waic_continuous_quadratic(const HistoricalContinuous& hist, const ContinuousStats& data) {
  const NormalMixturePosterior post = continuous_posterior(hist, data, 0.0);
  const ContinuousSums s = continuous_sums(post, data);
  return quadratic_from_sums(s.eh, s.e0, s.vh, s.v0, s.d2);
}

WaicValue waic_continuous_raw_moments(const HistoricalContinuous& hist, const ContinuousStats& data,
                                      double w_h) {
  const NormalMixturePosterior post = continuous_posterior(hist, data, w_h);
  const double n = static_cast<double>(data.n);
  const double s2 = data.sigma * data.sigma;
  const double L = log_norm_const(data.sigma);
  const double w = post.w_star;

  // f = L - (y - theta)^2 / (2 sigma^2);  E[(y-theta)^2] = (y-mu)^2 + tau^2,
  // E[(y-theta)^4] = (y-mu)^4 + 6 (y-mu)^2 tau^2 + 3 tau^4.
  auto sum_ef = [&](double mu, double tau2) { return n * L - (central2(data, mu) + n * tau2) / (2.0 * s2); };
  auto sum_ef2 = [&](double mu, double tau2) {
    const double c2 = central2(data, mu);
    const double c4 = central4(data, mu);
    return n * L * L - L * (c2 + n * tau2) / s2 +
           (c4 + 6.0 * tau2 * c2 + 3.0 * n * tau2 * tau2) / (4.0 * s2 * s2);
  };
  // sum_i E_c[f]^2 with E_c[f] = A_c - (y - mu_c)^2 / (2 sigma^2).
  auto sum_sq_ef = [&](double mu, double tau2) {
    const double A = L - tau2 / (2.0 * s2);
    return n * A * A - A * central2(data, mu) / s2 + central4(data, mu) / (4.0 * s2 * s2);
  };
  const double Ah = L - post.tau2_h / (2.0 * s2);
  const double A0 = L - post.tau2_0 / (2.0 * s2);
  const double cross = n * Ah * A0 - Ah * central2(data, post.mu_0) / (2.0 * s2) -
                       A0 * central2(data, post.mu_h) / (2.0 * s2) +
                       cross22(data, post.mu_h, post.mu_0) / (4.0 * s2 * s2);

  const double eh = sum_ef(post.mu_h, post.tau2_h);
  const double e0 = sum_ef(post.mu_0, post.tau2_0);
  const double sum_e = w * eh + (1.0 - w) * e0;
  const double sum_e2_mix = w * sum_ef2(post.mu_h, post.tau2_h) + (1.0 - w) * sum_ef2(post.mu_0, post.tau2_0);
  const double sum_mean_sq = w * w * sum_sq_ef(post.mu_h, post.tau2_h) + 2.0 * w * (1.0 - w) * cross +
                             (1.0 - w) * (1.0 - w) * sum_sq_ef(post.mu_0, post.tau2_0);
  WaicValue out;
  out.fit_term = -2.0 * sum_e;
  out.penalty_term = 2.0 * (sum_e2_mix - sum_mean_sq);
  out.total = out.fit_term + out.penalty_term;
  return out;
}

double k_continuous_prospective(const HistoricalContinuous& hist, std::int64_t n, double sigma,
                                double ybar) {
  return waic_continuous_quadratic(hist, ContinuousStats::from_population_moments(n, ybar, sigma)).k();
}

BorrowingRegionContinuous borrowing_region_continuous(const HistoricalContinuous& hist,
                                                      std::int64_t n, double sigma) {
  validate(hist);
  if (n < 2) throw DomainError("borrowing_region_continuous: n must be >= 2");
  if (!(sigma > 0.0)) throw DomainError("borrowing_region_continuous: sigma must be positive");

  constexpr int kGrid = 2001;
  constexpr int kCenter = kGrid / 2;
  const double lo = hist.ybar_h - 10.0 * hist.vague_sd;
  const double step = 20.0 * hist.vague_sd / (kGrid - 1);
  auto k_at = [&](double y) { return k_continuous_prospective(hist, n, sigma, y); };
  auto grid_y = [&](int i) { return i == kCenter ? hist.ybar_h : lo + step * i; };

  std::vector<double> k(kGrid);
  for (int i = 0; i < kGrid; ++i) k[i] = k_at(grid_y(i));

  BorrowingRegionContinuous region;
  region.sigma = sigma;
  for (int i = 1; i < kGrid; ++i) {
    if (sign_of(k[i]) != sign_of(k[i - 1])) ++region.sign_changes;
  }
  if (region.sign_changes > 2) {
    std::ostringstream os;
    os << "k changes sign " << region.sign_changes << " times on the scan grid";
    region.diagnostic = os.str();
  }
  if (k[kCenter] > 0.0) {
    region.empty = true;
    if (region.diagnostic.empty()) region.diagnostic = "k > 0 at the historical mean";
    return region;
  }
  region.empty = false;

  // Bracket [inside, outside] and bisect to the boundary, keeping the inside
  // end so the returned endpoint itself satisfies k <= 0.
  auto refine = [&](double inside, double outside) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      if (k_at(mid) <= 0.0) {
        inside = mid;
      } else {
        outside = mid;
      }
    }
    return inside;
  };

  int i = kCenter;
  while (i > 0 && k[i - 1] <= 0.0) --i;
  region.ybar_lower = i == 0 ? grid_y(0) : refine(grid_y(i), grid_y(i - 1));
  if (i == 0) region.diagnostic += (region.diagnostic.empty() ? "" : "; ") + std::string("lower end at scan boundary");
  int j = kCenter;
  while (j < kGrid - 1 && k[j + 1] <= 0.0) ++j;
  region.ybar_upper = j == kGrid - 1 ? grid_y(kGrid - 1) : refine(grid_y(j), grid_y(j + 1));
  if (j == kGrid - 1) region.diagnostic += (region.diagnostic.empty() ? "" : "; ") + std::string("upper end at scan boundary");
  return region;
}

GateDecision gate_continuous(const HistoricalContinuous& hist, const ContinuousStats& data) {
  GateDecision g;
  g.waic0 = waic_continuous(hist, data, 0.0);
  g.waic1 = waic_continuous(hist, data, 1.0);
  g.k = g.waic1.total - g.waic0.total;
  g.borrow = g.k <= 0.0;
  return g;
}

}  // namespace wow
