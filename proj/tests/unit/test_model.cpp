#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "wow/errors.hpp"
#include "wow/model.hpp"

using namespace wow;

namespace {
const BetaShape kFlat{1.0, 1.0};
const BinaryDataset kData{60, 150};
const HistoricalBinary kHist{240, 600};

double integrate(const std::function<double(double)>& f, double lo, double hi) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
}
}  // namespace

TEST_CASE("binary posterior boundaries") {
  const auto p0 = binary_posterior(kFlat, kData, kHist, 0.0);
  CHECK(p0.w_star == 0.0);
  CHECK(p0.noborrow == BetaShape{61, 91});
  const auto p1 = binary_posterior(kFlat, kData, kHist, 1.0);
  CHECK(p1.w_star == 1.0);
  CHECK(p1.borrow == BetaShape{301, 451});
  CHECK(posterior_mean(p1) == doctest::Approx(301.0 / 752.0).epsilon(1e-15));
  CHECK(posterior_mean(p0) == doctest::Approx(61.0 / 152.0).epsilon(1e-15));
}

TEST_CASE("binary posterior weight from log-gamma evidence") {
  const auto post = binary_posterior(kFlat, kData, kHist, 0.5);
  auto lb = [](double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); };
  const double lzh = lb(301, 451) - lb(241, 361);
  const double lz0 = lb(61, 91) - lb(1, 1);
  CHECK(post.log_z_h == doctest::Approx(lzh).epsilon(1e-12));
  CHECK(post.log_z_0 == doctest::Approx(lz0).epsilon(1e-12));
  CHECK(post.w_star == doctest::Approx(1.0 / (1.0 + std::exp(lz0 - lzh))).epsilon(1e-12));
}

TEST_CASE("posterior weight is monotone and hits the ends") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lz(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = lz(rng), b = lz(rng);
    CHECK(posterior_weight(0.0, a, b) == 0.0);
    CHECK(posterior_weight(1.0, a, b) == 1.0);
    double prev = 0.0;
    for (double w = 0.05; w < 1.0; w += 0.05) {
      const double ws = posterior_weight(w, a, b);
      CHECK(ws >= prev);
      prev = ws;
    }
  }
  CHECK(posterior_weight(0.3, 0.0, 0.0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK_THROWS_AS(posterior_weight(1.5, 0.0, 0.0), DomainError);
}

TEST_CASE("weight prior reduction") {
  const auto a = marginal_posterior_via_weight_prior(kFlat, kData, kHist, 0.5);
  const auto b = binary_posterior(kFlat, kData, kHist, 0.5);
  CHECK(a.w_star == b.w_star);
  CHECK(marginal_posterior_via_weight_prior(kFlat, kData, kHist, 0.0).w_star == 0.0);
}

TEST_CASE("mixture density integrates to one and quantile inverts cdf") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::int64_t> nh(1, 1500);
  for (int i = 0; i < 100; ++i) {
    const std::int64_t n = std::uniform_int_distribution<std::int64_t>(1, 300)(rng);
    const std::int64_t x = std::uniform_int_distribution<std::int64_t>(0, n)(rng);
    const std::int64_t n_h = nh(rng);
    const std::int64_t x_h = std::uniform_int_distribution<std::int64_t>(0, n_h)(rng);
    const double w = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto post = binary_posterior(kFlat, {x, n}, {x_h, n_h}, w);
    const double mass = integrate([&](double u) { return post.density(u); }, 0.0, 1.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    for (double p : {0.025, 0.5, 0.975}) CHECK(post.cdf(post.quantile(p, 1e-12)) == doctest::Approx(p).epsilon(1e-8));
  }
}

TEST_CASE("posterior mean is the convex combination") {
  BinaryMixturePosterior post;
  post.w_star = 0.25;
  post.borrow = {40, 60};
  post.noborrow = {41, 59};
  CHECK(posterior_mean(post) == doctest::Approx(0.4075).epsilon(1e-15));
}

TEST_CASE("continuous posterior") {
  HistoricalContinuous h;
  h.ybar_h = 0.0;
  h.s2_h = 9.0;
  h.n_h = 900;
  h.vague_sd = 10.0;
  const auto d = ContinuousStats::from_population_moments(150, 0.0, 3.0);
  SUBCASE("w = 1 keeps only the informative component") {
    const auto p = continuous_posterior(h, d, 1.0);
    CHECK(p.w_star == 1.0);
    CHECK(posterior_mean(p) == doctest::Approx(p.mu_h));
  }
  SUBCASE("agreement raises the weight") {
    const auto p = continuous_posterior(h, d, 0.5);
    CHECK(p.mu_h == doctest::Approx(0.0));
    CHECK(p.mu_0 == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(p.w_star > 0.5);
  }
  SUBCASE("precision bound") {
    const auto p = continuous_posterior(h, d, 0.5);
    CHECK(p.tau2_h <= std::min(9.0 / 900.0, 9.0 / 150.0) + 1e-12);
    CHECK(p.tau2_0 > 0.0);
  }
  SUBCASE("large n tracks the data") {
    const auto big = ContinuousStats::from_population_moments(1'000'000, 0.7, 3.0);
    const auto p = continuous_posterior(h, big, 0.5);
    CHECK(std::abs(p.mu_0 - 0.7) < 1e-5);
    CHECK(std::abs(p.mu_h - 0.7) < 0.7 * 900.0 / 1e6 * 1.01);
  }
  SUBCASE("density integrates to one") {
    const auto p = continuous_posterior(h, ContinuousStats::from_population_moments(150, 0.3, 3.0), 0.5);
    CHECK(integrate([&](double u) { return p.density(u); }, -5.0, 5.0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(p.cdf(p.quantile(0.9, 1e-12)) == doctest::Approx(0.9).epsilon(1e-9));
  }
}

TEST_CASE("vague prior warning") {
  HistoricalContinuous h;
  h.s2_h = 9.0;
  h.n_h = 1;
  h.vague_sd = 2.0;
  CHECK(h.vague_prior_warning().has_value());
  h.vague_sd = 10.0;
  h.n_h = 900;
  CHECK_FALSE(h.vague_prior_warning().has_value());
}

TEST_CASE("power-sum validation") {
  ContinuousStats s;
  s.n = 2;
  s.s1 = 10.0;
  s.s2 = 1.0;
  s.s4 = 100.0;
  CHECK_THROWS_AS(validate(s), DomainError);
  CHECK_THROWS_AS(validate(HistoricalBinary{20, 10}), DomainError);
  CHECK_THROWS_AS(validate(BinaryDataset{11, 10}), DomainError);
}

TEST_CASE("prob_greater closed forms") {
  CHECK(prob_greater(BetaShape{2, 1}, BetaShape{1, 1}) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(prob_greater(NormalShape{1, 1}, NormalShape{0, 1}) == doctest::Approx(0.7602499389065233).epsilon(1e-12));
  CHECK(prob_greater(BetaShape{7, 9}, BetaShape{7, 9}) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("prob_greater against adaptive quadrature and complement identity") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> shape(1.0, 500.0);
  for (int i = 0; i < 40; ++i) {
    const BetaShape t{shape(rng), shape(rng)};
    const auto c = binary_posterior(kFlat, {std::uniform_int_distribution<std::int64_t>(0, 150)(rng), 150}, kHist, 0.5);
    const double oracle = integrate(
        [&](double u) { return c.density(u) * (1.0 - beta_cdf(u, t)); }, 0.0, 1.0);
    CHECK(std::abs(prob_greater(t, c) - oracle) <= 1e-8);
    CHECK(std::abs(prob_greater(BetaSurvivalGrid(t), c) - prob_greater(t, c)) <= 1e-15);
    const auto c2 = binary_posterior(kFlat, {std::uniform_int_distribution<std::int64_t>(0, 150)(rng), 150}, kHist, 0.3);
    CHECK(prob_greater(c, c2) + prob_greater(c2, c) == doctest::Approx(1.0).epsilon(1e-8));
  }
  const NormalMixturePosterior a{0.3, 0.1, 0.01, 0.4, 0.05, 0, 0};
  const NormalMixturePosterior b{0.6, 0.0, 0.02, 0.2, 0.04, 0, 0};
  CHECK(prob_greater(a, b) + prob_greater(b, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("treatment posteriors use the vague prior only") {
  CHECK(treatment_posterior(kFlat, BinaryDataset{100, 300}) == BetaShape{101, 201});
  const auto t = treatment_posterior(0.0, 10.0, ContinuousStats::from_population_moments(300, 0.7, 3.0));
  const double prec = 1.0 / 100.0 + 300.0 / 9.0;
  CHECK(t.var == doctest::Approx(1.0 / prec).epsilon(1e-14));
  CHECK(t.mean == doctest::Approx(300.0 * 0.7 / 9.0 / prec).epsilon(1e-14));
}
