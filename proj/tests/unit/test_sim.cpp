#include <doctest.h>

#include <cmath>

#include "wow/errors.hpp"
#include "wow/sim.hpp"

using namespace wow;

namespace {
ScenarioConfig binary_cfg(WeightPolicy p, bool g, std::int64_t reps = 400) {
  ScenarioConfig c;
  c.theta = 0.3;
  c.theta_t = 0.4;
  c.theta_h = 0.3;
  c.policy = p;
  c.gated = g;
  c.reps = reps;
  c.seed = 1234;
  return c;
}

ScenarioConfig continuous_cfg(WeightPolicy p, bool g) {
  ScenarioConfig c;
  c.endpoint = Endpoint::continuous;
  c.theta = 0.0;
  c.theta_t = 0.7;
  c.theta_h = 0.0;
  c.sigma = 3.0;
  c.n_h = 900;
  c.policy = p;
  c.gated = g;
  c.reps = 200;
  c.seed = 99;
  return c;
}

bool same(const ScenarioResult& a, const ScenarioResult& b) {
  return a.rejection_rate == b.rejection_rate && a.mean_estimate == b.mean_estimate && a.mse == b.mse &&
         a.rel_bias == b.rel_bias && a.rel_mse == b.rel_mse && a.mean_weight == b.mean_weight;
}
}  // namespace

TEST_CASE("validation") {
  auto c = binary_cfg(FixedWeight{0.5}, false);
  c.theta = 1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = binary_cfg(FixedWeight{0.5}, false);
  c.reps = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  CHECK_THROWS_AS(parse_endpoint("survival"), ConfigError);
  CHECK(parse_endpoint(endpoint_name(Endpoint::continuous)) == Endpoint::continuous);
}

TEST_CASE("historical summary is deterministic and rounds half to even") {
  auto c = binary_cfg(FixedWeight{0.5}, false);
  c.n_h = 5;
  c.theta_h = 0.5;  // 2.5 -> 2
  CHECK(historical_successes(c) == 2);
  c.theta_h = 0.7;  // 3.5 -> 4
  CHECK(historical_successes(c) == 4);
  c.seed = 77;
  CHECK(historical_successes(c) == 4);
  const auto hc = historical_continuous(continuous_cfg(SamWeight{}, true));
  CHECK(hc.s2_h == 9.0);
  CHECK(hc.ybar_h == 0.0);
  CHECK(effect_size(continuous_cfg(SamWeight{}, true)) == doctest::Approx(0.7 / 3.0));
}

TEST_CASE("unreachable threshold never rejects") {
  auto c = binary_cfg(FixedWeight{0.5}, false);
  c.theta_t = c.theta;
  for (std::int64_t r = 0; r < 50; ++r) CHECK_FALSE(run_replicate(c, r, 1.0).reject);
  CHECK_THROWS_AS(run_replicate(c, c.reps, 0.5), ConfigError);
}

TEST_CASE("gated replicates outside the region equal the NP estimate") {
  auto c = binary_cfg(SamWeight{0.15}, true);
  c.theta = 0.5;  // far from theta_h: almost every draw falls outside [49, 71]
  const ScenarioEngine engine(c);
  int outside = 0;
  for (std::int64_t r = 0; r < 200; ++r) {
    const auto rec = engine.replicate(r, 0.975);
    if (rec.gated_out) {
      ++outside;
      CHECK(rec.control_post_mean == rec.np_post_mean);
      CHECK(rec.w_h == 0.0);
    }
  }
  CHECK(outside > 150);
}

TEST_CASE("bitwise determinism across worker counts") {
  for (const auto& c : {binary_cfg(EbRmapWeight{}, true), continuous_cfg(SamWeight{}, true)}) {
    const ScenarioResult one = estimate_power(c, 0.95, {1});
    CHECK(same(one, estimate_power(c, 0.95, {4})));
    CHECK(same(one, estimate_power(c, 0.95, {8})));
    const ScenarioEngine engine(c);
    const auto a = engine.replicate(7, 0.95);
    const auto b = run_replicates(engine, 8, 0.95, {8})[7];
    CHECK(a.statistic == b.statistic);
    CHECK(a.control_post_mean == b.control_post_mean);
  }
}

TEST_CASE("NP relative metrics vanish identically") {
  const auto r = estimate_power(binary_cfg(FixedWeight{0.0}, false), 0.95, {1});
  CHECK(r.rel_bias == 0.0);
  CHECK(r.rel_mse == 0.0);
  CHECK(r.mc_stderr == doctest::Approx(std::sqrt(r.rejection_rate * (1 - r.rejection_rate) / 400.0)));
}

TEST_CASE("empirical quantile is type 7") {
  CHECK(empirical_quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(empirical_quantile({4, 1, 3, 2}, 1.0) == 4.0);
  CHECK(empirical_quantile({5}, 0.3) == 5.0);
  CHECK(empirical_quantile({0, 10}, 0.95) == doctest::Approx(9.5));
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), DomainError);
}

TEST_CASE("calibration") {
  auto c = binary_cfg(FixedWeight{0.0}, false, 2000);
  CHECK_THROWS_AS(calibrate_threshold(c), ConfigError);
  c.theta_t = c.theta;
  const auto cal = calibrate_threshold(c, {1});
  CHECK(cal.reps_used == 2000);
  CHECK(cal.warnings.empty());
  CHECK(cal.achieved_alpha <= 0.05 + 2.0 * std::sqrt(0.05 * 0.95 / 2000.0));
  CHECK(cal.threshold_c > 0.5);
  CHECK(cal.threshold_c < 1.0);

  auto median = c;
  median.alpha = 0.5;
  median.reps = 500;
  const auto m = calibrate_threshold(median, {1});
  CHECK(std::abs(m.threshold_c - 0.5) < 0.1);

  auto tiny = c;
  tiny.reps = 10;
  CHECK_FALSE(calibrate_threshold(tiny, {1}).warnings.empty());
  tiny.calib_reps = 150;
  CHECK(calibrate_threshold(tiny, {1}).reps_used == 150);
}

TEST_CASE("sweep shape and seeding") {
  std::vector<SweepCell> grid;
  for (int i = 0; i < 31; ++i) {
    for (const WeightPolicy& p : {WeightPolicy{FixedWeight{0.5}}, WeightPolicy{SamWeight{}}, WeightPolicy{EbRmapWeight{}}}) {
      for (bool g : {false, true}) {
        auto c = binary_cfg(p, g, 20);
        c.theta = 0.1 + 0.02 * i;
        c.theta_t = c.theta;
        grid.push_back({"t" + std::to_string(i), policy_name(p) + (g ? "_g" : ""), c});
      }
    }
  }
  SweepOptions opts;
  opts.run.workers = 1;
  opts.fixed_threshold = 0.975;
  const auto rows = sweep(grid, opts);
  REQUIRE(rows.size() == 186);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.result.rel_bias));
    CHECK(std::isfinite(r.result.rel_mse));
  }
  CHECK_THROWS_AS(sweep({}, opts), ConfigError);
  CHECK(derive_seed(1, 2, 0) != derive_seed(1, 2, 1));
  CHECK(derive_seed(1, 2, 0) != derive_seed(1, 3, 0));
}

TEST_CASE("gated and ungated agree when the truth keeps x inside the region") {
  auto plain = binary_cfg(SamWeight{0.15}, false, 1000);
  plain.theta = plain.theta_h = 0.4;
  plain.theta_t = 0.5;
  plain.n = 600;
  plain.n_t = 1200;
  plain.n_h = 2400;
  auto gated_cfg = plain;
  gated_cfg.gated = true;
  const auto a = estimate_power(plain, 0.95, {1});
  const auto b = estimate_power(gated_cfg, 0.95, {1});
  CHECK(std::abs(a.rejection_rate - b.rejection_rate) <= 3.0 * std::sqrt(2.0) * a.mc_stderr + 0.01);
  // the region spans about +-2 binomial sd at any n, so a few draws always fall outside
  CHECK(b.gated_out_rate < 0.1);
}
