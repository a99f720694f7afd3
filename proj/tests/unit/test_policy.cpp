#include <doctest.h>

#include <cmath>
#include <random>

#include "wow/errors.hpp"
#include "wow/policy.hpp"

using namespace wow;

namespace {
const BetaShape kFlat{1.0, 1.0};
const HistoricalBinary kHist{240, 600};
BinaryInputs at(std::int64_t x) { return {kFlat, {x, 150}, kHist}; }
}  // namespace

TEST_CASE("fixed weights") {
  CHECK(fixed_weight({0.5}).w_h == 0.5);
  CHECK(fixed_weight({0.0}).w_h == 0.0);
  CHECK(fixed_weight({1.0}).w_h == 1.0);
  CHECK_THROWS_AS(fixed_weight({1.5}), ConfigError);
  CHECK(policy_name(FixedWeight{0.0}) == "np");
  CHECK(policy_name(FixedWeight{0.5}) == "fixed");
}

TEST_CASE("SAM weight") {
  CHECK(sam_weight({0.15}, at(60)).w_h > 0.99);
  const auto x_alt = static_cast<std::int64_t>(std::nearbyint(150 * 0.55));
  CHECK(sam_weight({0.15}, at(x_alt)).w_h < 0.5);
  // lower alternative out of range: only the upper one counts
  const BinaryInputs low{kFlat, {5, 150}, {30, 600}};
  const auto d = sam_weight({0.1}, low);
  const double expect = binomial_log_pmf(5, 150, 0.05) - binomial_log_pmf(5, 150, 0.15);
  CHECK(d.diagnostics.at("log_R") == doctest::Approx(expect).epsilon(1e-12));
  CHECK_THROWS_AS(sam_weight({0.9}, BinaryInputs{kFlat, {5, 150}, {300, 600}}), ConfigError);
  CHECK_THROWS_AS(sam_weight({-0.1}, at(60)), ConfigError);
}

TEST_CASE("SAM equals one half at equal likelihoods and decays away from the peak") {
  HistoricalContinuous h;
  h.ybar_h = 0.0;
  h.s2_h = 9.0;
  h.n_h = 900;
  // ybar exactly between theta_h and theta_h + delta: L(theta_h) = L(theta_h + delta)
  const auto d = sam_weight({0.2}, ContinuousInputs{h, ContinuousStats::from_population_moments(150, 0.1, 3.0)});
  CHECK(d.w_h == doctest::Approx(0.5).epsilon(1e-12));
  double prev = 2.0;
  for (std::int64_t x = 60; x <= 120; ++x) {
    const double w = sam_weight({0.15}, at(x)).w_h;
    CHECK(w <= prev);
    prev = w;
  }
}

TEST_CASE("prior predictive p-values and EB-rMAP") {
  const BetaShape informative{241, 361};
  double lower = 0.0, upper = 0.0;
  for (std::int64_t k = 0; k <= 150; ++k) {
    const double p = std::exp(beta_binomial_log_pmf(k, 150, informative));
    if (k <= 66) lower += p;
    if (k >= 66) upper += p;
  }
  const double two = std::min(1.0, 2.0 * std::min(lower, upper));
  CHECK(prior_predictive_pvalue(at(66), PppTail::two_sided) == doctest::Approx(two).epsilon(1e-12));
  CHECK(prior_predictive_pvalue(at(66), PppTail::lower) == doctest::Approx(lower).epsilon(1e-12));
  CHECK(prior_predictive_pvalue(at(66), PppTail::upper) == doctest::Approx(upper).epsilon(1e-12));
  const double expect = std::round(std::min(1.0, two / 0.2) / 0.01) * 0.01;
  CHECK(ebrmap_weight({0.8, PppTail::two_sided, 0.01}, at(66)).w_h == doctest::Approx(expect).epsilon(1e-12));
  CHECK(ebrmap_weight({}, at(60)).w_h == 1.0);
  CHECK(ebrmap_weight({}, at(0)).w_h == 0.0);
}

TEST_CASE("EB-rMAP monotonicity") {
  const EbRmapWeight lo{0.5, PppTail::two_sided, 0.01};
  const EbRmapWeight hi{0.9, PppTail::two_sided, 0.01};
  double prev = 0.0;
  for (double ppp = 0.0; ppp <= 1.0; ppp += 0.01) {
    const double w = ebrmap_weight_from_ppp(lo, ppp);
    CHECK(w >= prev);
    CHECK(ebrmap_weight_from_ppp(hi, ppp) >= w);
    prev = w;
  }
  CHECK_THROWS_AS(ebrmap_weight_from_ppp({1.0, PppTail::two_sided, 0.01}, 0.1), ConfigError);
}

TEST_CASE("gated wrapper") {
  const WeightPolicy sam = SamWeight{0.15};
  const auto out = gated(sam, gate_binary(kFlat, {48, 150}, kHist), at(48));
  CHECK(out.w_h == 0.0);
  CHECK(out.gated_out);
  const auto mix = gated(FixedWeight{0.5}, gate_binary(kFlat, {60, 150}, kHist), at(60));
  CHECK(mix.w_h == 0.5);
  CHECK_FALSE(mix.gated_out);
  CHECK(gated(sam, gate_binary(kFlat, {60, 150}, kHist), at(60)).w_h == sam_weight({0.15}, at(60)).w_h);
}

TEST_CASE("gated composition identity over the whole sample space") {
  const auto region = borrowing_region_binary(kFlat, 150, kHist);
  for (const WeightPolicy& p : {WeightPolicy{FixedWeight{0.5}}, WeightPolicy{SamWeight{0.15}}, WeightPolicy{EbRmapWeight{}}}) {
    for (std::int64_t x = 0; x <= 150; ++x) {
      const auto g = gated(p, gate_binary(kFlat, {x, 150}, kHist), at(x));
      if (region.contains(x)) {
        CHECK(g.w_h == apply_policy(p, at(x)).w_h);
      } else {
        CHECK(binary_posterior(kFlat, {x, 150}, kHist, g.w_h).w_star == 0.0);
      }
    }
  }
}

TEST_CASE("all policy outputs lie in [0, 1]") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 10000; ++i) {
    const std::int64_t n = std::uniform_int_distribution<std::int64_t>(1, 300)(rng);
    const std::int64_t nh = std::uniform_int_distribution<std::int64_t>(1, 2000)(rng);
    const BinaryInputs in{kFlat,
                          {std::uniform_int_distribution<std::int64_t>(0, n)(rng), n},
                          {std::uniform_int_distribution<std::int64_t>(0, nh)(rng), nh}};
    const double delta = std::uniform_real_distribution<double>(0.01, 0.4)(rng);
    const double gamma = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    for (const WeightPolicy& p : {WeightPolicy{SamWeight{delta}}, WeightPolicy{EbRmapWeight{gamma, PppTail::lower, 0.01}}}) {
      const double w = apply_policy(p, in).w_h;
      CHECK((w >= 0.0 && w <= 1.0));
    }
  }
}

TEST_CASE("tail names round-trip") {
  for (PppTail t : {PppTail::lower, PppTail::upper, PppTail::two_sided}) CHECK(parse_tail(tail_name(t)) == t);
  CHECK_THROWS_AS(parse_tail("sideways"), ConfigError);
}
