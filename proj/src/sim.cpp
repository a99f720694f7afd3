#include "wow/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "wow/errors.hpp"

namespace wow {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Static contiguous partition; each index is written by exactly one worker.
template <class Fn>
void parallel_for(std::int64_t count, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::int64_t>(workers, std::max<std::int64_t>(count, 1)));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::int64_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::int64_t begin = static_cast<std::int64_t>(w) * chunk;
    const std::int64_t end = std::min(count, begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ScenarioConfig null_of(ScenarioConfig cfg) {
  cfg.theta_t = cfg.theta;
  return cfg;
}

}  // namespace

std::string endpoint_name(Endpoint e) { return e == Endpoint::binary ? "binary" : "continuous"; }

Endpoint parse_endpoint(const std::string& name) {
  if (name == "binary") return Endpoint::binary;
  if (name == "continuous") return Endpoint::continuous;
  throw ConfigError("unknown endpoint '" + name + "' (expected binary or continuous)");
}

void validate(const ScenarioConfig& cfg) {
  if (cfg.n < 1 || cfg.n_t < 1 || cfg.n_h < 1) throw ConfigError("n, n_t and n_h must be >= 1");
  if (cfg.reps < 1) throw ConfigError("reps must be >= 1");
  if (cfg.calib_reps < 0) throw ConfigError("calib_reps must be >= 0");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  validate(cfg.policy);
  if (cfg.endpoint == Endpoint::binary) {
    auto in_unit = [](double v) { return v > 0.0 && v < 1.0; };
    if (!in_unit(cfg.theta) || !in_unit(cfg.theta_t) || !in_unit(cfg.theta_h)) {
      throw ConfigError("binary scenario: theta, theta_t and theta_h must lie in (0, 1)");
    }
    validate(cfg.prior);
  } else {
    if (!(cfg.sigma > 0.0)) throw ConfigError("continuous scenario: sigma must be positive");
    if (!(cfg.sigma0 > 0.0)) throw ConfigError("continuous scenario: sigma0 must be positive");
    if (cfg.plugin_sigma && (cfg.n < 2 || cfg.n_t < 2)) {
      throw ConfigError("plug-in sigma needs n >= 2 and n_t >= 2");
    }
  }
}

double effect_size(const ScenarioConfig& cfg) { return (cfg.theta_t - cfg.theta) / cfg.sigma; }

std::int64_t historical_successes(const ScenarioConfig& cfg) {
  return static_cast<std::int64_t>(std::nearbyint(static_cast<double>(cfg.n_h) * cfg.theta_h));
}

HistoricalBinary historical_binary(const ScenarioConfig& cfg) {
  return {historical_successes(cfg), cfg.n_h};
}

HistoricalContinuous historical_continuous(const ScenarioConfig& cfg) {
  HistoricalContinuous h;
  h.ybar_h = cfg.theta_h;
  h.s2_h = cfg.sigma * cfg.sigma;
  h.n_h = cfg.n_h;
  h.vague_mean = cfg.vague_mean;
  h.vague_sd = cfg.sigma0;
  return h;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

struct ScenarioEngine::Impl {
  ScenarioConfig cfg;
  // binary
  HistoricalBinary hist_b;
  BorrowingRegionBinary region;
  std::vector<WeightDecision> weights;  // per concurrent x = 0..n
  std::vector<BinaryMixturePosterior> control_post;
  std::vector<double> np_mean;
  std::vector<BetaSurvivalGrid> treat_survival;  // per treatment x_t = 0..n_t
  // continuous
  HistoricalContinuous hist_c;

  explicit Impl(const ScenarioConfig& c) : cfg(c) {
    validate(cfg);
    if (cfg.endpoint == Endpoint::binary) {
      init_binary();
    } else {
      hist_c = historical_continuous(cfg);
    }
  }

  void init_binary() {
    hist_b = historical_binary(cfg);
    if (cfg.gated) region = borrowing_region_binary(cfg.prior, cfg.n, hist_b);
    const auto n1 = static_cast<std::size_t>(cfg.n + 1);
    weights.resize(n1);
    control_post.resize(n1);
    np_mean.resize(n1);
    for (std::int64_t x = 0; x <= cfg.n; ++x) {
      const BinaryInputs in{cfg.prior, {x, cfg.n}, hist_b};
      WeightDecision d;
      if (cfg.gated && !region.contains(x)) {
        d.w_h = 0.0;
        d.gated_out = true;
      } else {
        d = apply_policy(cfg.policy, in);
      }
      const auto i = static_cast<std::size_t>(x);
      weights[i] = d;
      control_post[i] = binary_posterior(cfg.prior, in.data, hist_b, d.w_h);
      np_mean[i] = posterior_mean(binary_posterior(cfg.prior, in.data, hist_b, 0.0));
    }
    treat_survival.reserve(static_cast<std::size_t>(cfg.n_t + 1));
    for (std::int64_t xt = 0; xt <= cfg.n_t; ++xt) {
      treat_survival.emplace_back(treatment_posterior(cfg.prior, BinaryDataset{xt, cfg.n_t}));
    }
  }

  ReplicateRecord replicate(std::int64_t rep, double c) const {
    std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(rep)));
    ReplicateRecord rec = cfg.endpoint == Endpoint::binary ? binary_replicate(rng) : continuous_replicate(rng);
    rec.reject = rec.statistic > c;
    return rec;
  }

  ReplicateRecord binary_replicate(std::mt19937_64& rng) const {
    std::binomial_distribution<std::int64_t> control(cfg.n, cfg.theta);
    std::binomial_distribution<std::int64_t> treated(cfg.n_t, cfg.theta_t);
    const std::int64_t x = control(rng);
    const std::int64_t xt = treated(rng);
    const auto i = static_cast<std::size_t>(x);
    ReplicateRecord rec;
    rec.w_h = weights[i].w_h;
    rec.gated_out = weights[i].gated_out;
    rec.control_post_mean = posterior_mean(control_post[i]);
    rec.np_post_mean = np_mean[i];
    rec.statistic = prob_greater(treat_survival[static_cast<std::size_t>(xt)], control_post[i]);
    return rec;
  }

  ReplicateRecord continuous_replicate(std::mt19937_64& rng) const {
    std::normal_distribution<double> control(cfg.theta, cfg.sigma);
    std::normal_distribution<double> treated(cfg.theta_t, cfg.sigma);
    std::vector<double> y(static_cast<std::size_t>(cfg.n));
    for (auto& v : y) v = control(rng);
    std::vector<double> yt(static_cast<std::size_t>(cfg.n_t));
    for (auto& v : yt) v = treated(rng);

    ContinuousStats cs = ContinuousStats::from_samples(y, cfg.sigma);
    ContinuousStats ts = ContinuousStats::from_samples(yt, cfg.sigma);
    if (cfg.plugin_sigma) {
      cs.sigma = cs.sample_sd();
      ts.sigma = ts.sample_sd();
    }
    const ContinuousInputs in{hist_c, cs};
    const WeightDecision d =
        cfg.gated ? gated(cfg.policy, gate_continuous(hist_c, cs), in) : apply_policy(cfg.policy, in);
    const NormalMixturePosterior post = continuous_posterior(hist_c, cs, d.w_h);
    const NormalShape treat = treatment_posterior(cfg.vague_mean, cfg.sigma0, ts);

    ReplicateRecord rec;
    rec.w_h = d.w_h;
    rec.gated_out = d.gated_out;
    rec.control_post_mean = posterior_mean(post);
    rec.np_post_mean = posterior_mean(continuous_posterior(hist_c, cs, 0.0));
    rec.statistic = prob_greater(treat, post);
    return rec;
  }
};

ScenarioEngine::ScenarioEngine(const ScenarioConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {}
ScenarioEngine::~ScenarioEngine() = default;
ScenarioEngine::ScenarioEngine(ScenarioEngine&&) noexcept = default;
ScenarioEngine& ScenarioEngine::operator=(ScenarioEngine&&) noexcept = default;

ReplicateRecord ScenarioEngine::replicate(std::int64_t rep_index, double threshold_c) const {
  return impl_->replicate(rep_index, threshold_c);
}

const ScenarioConfig& ScenarioEngine::config() const noexcept { return impl_->cfg; }
const BorrowingRegionBinary& ScenarioEngine::region() const noexcept { return impl_->region; }

ReplicateRecord run_replicate(const ScenarioConfig& cfg, std::int64_t rep_index, double threshold_c) {
  if (rep_index < 0 || rep_index >= cfg.reps) throw ConfigError("run_replicate: rep_index out of range");
  return ScenarioEngine(cfg).replicate(rep_index, threshold_c);
}

std::vector<ReplicateRecord> run_replicates(const ScenarioEngine& engine, std::int64_t count,
                                            double threshold_c, const RunOptions& opts) {
  std::vector<ReplicateRecord> out(static_cast<std::size_t>(count));
  parallel_for(count, opts.workers,
               [&](std::int64_t i) { out[static_cast<std::size_t>(i)] = engine.replicate(i, threshold_c); });
  return out;
}

double empirical_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DomainError("empirical_quantile: empty sample");
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("empirical_quantile: prob must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

CalibrationResult calibrate_threshold(const ScenarioConfig& cfg_null, const RunOptions& opts) {
  if (cfg_null.theta_t != cfg_null.theta) {
    throw ConfigError("calibrate_threshold: null scenario needs theta_t == theta");
  }
  const std::int64_t reps = cfg_null.calib_reps > 0 ? cfg_null.calib_reps : cfg_null.reps;
  ScenarioConfig cfg = cfg_null;
  cfg.reps = reps;
  const ScenarioEngine engine(cfg);
  const auto records = run_replicates(engine, reps, 1.0, opts);

  std::vector<double> stats;
  stats.reserve(records.size());
  for (const auto& r : records) stats.push_back(r.statistic);

  CalibrationResult out;
  out.reps_used = reps;
  out.threshold_c = empirical_quantile(stats, 1.0 - cfg.alpha);
  std::int64_t rejected = 0;
  for (double s : stats) rejected += s > out.threshold_c ? 1 : 0;
  out.achieved_alpha = static_cast<double>(rejected) / static_cast<double>(reps);
  if (reps < 100) {
    std::ostringstream os;
    os << "calibration with " << reps << " replicates: the (1 - alpha) quantile is unstable";
    out.warnings.push_back(os.str());
  }
  return out;
}

ScenarioResult summarize(const std::vector<ReplicateRecord>& records, double theta) {
  ScenarioResult r;
  r.reps = static_cast<std::int64_t>(records.size());
  if (records.empty()) return r;
  const double n = static_cast<double>(records.size());
  double rejections = 0.0, sum_est = 0.0, sum_sq = 0.0, sum_np_sq = 0.0;
  double sum_rb = 0.0, sum_rb2 = 0.0, sum_rm = 0.0, sum_rm2 = 0.0, sum_w = 0.0, gated_out = 0.0;
  for (const auto& rec : records) {
    rejections += rec.reject ? 1.0 : 0.0;
    sum_est += rec.control_post_mean;
    const double e = rec.control_post_mean - theta;
    const double e_np = rec.np_post_mean - theta;
    sum_sq += e * e;
    sum_np_sq += e_np * e_np;
    const double rb = rec.control_post_mean - rec.np_post_mean;
    sum_rb += rb;
    sum_rb2 += rb * rb;
    const double rm = e * e - e_np * e_np;
    sum_rm += rm;
    sum_rm2 += rm * rm;
    sum_w += rec.w_h;
    gated_out += rec.gated_out ? 1.0 : 0.0;
  }
  r.rejection_rate = rejections / n;
  r.mc_stderr = std::sqrt(r.rejection_rate * (1.0 - r.rejection_rate) / n);
  r.mean_estimate = sum_est / n;
  r.bias = r.mean_estimate - theta;
  r.mse = sum_sq / n;
  r.rel_bias = sum_rb / n;
  r.rel_mse = sum_rm / n;
  auto se = [n](double s, double s2) {
    if (n < 2.0) return 0.0;
    const double mean = s / n;
    return std::sqrt(std::max(0.0, (s2 - n * mean * mean) / (n - 1.0)) / n);
  };
  r.rel_bias_se = se(sum_rb, sum_rb2);
  r.rel_mse_se = se(sum_rm, sum_rm2);
  r.mean_weight = sum_w / n;
  r.gated_out_rate = gated_out / n;
  (void)sum_np_sq;
  return r;
}

ScenarioResult estimate_power(const ScenarioConfig& cfg, double threshold_c, const RunOptions& opts) {
  const ScenarioEngine engine(cfg);
  return summarize(run_replicates(engine, cfg.reps, threshold_c, opts), cfg.theta);
}

std::vector<SweepRow> sweep(const std::vector<SweepCell>& grid, const SweepOptions& opts) {
  if (grid.empty()) throw ConfigError("sweep: grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const SweepCell& cell = grid[i];
    ScenarioConfig cfg = cell.config;
    SweepRow row;
    row.scenario_id = cell.scenario_id;
    row.method = cell.method;
    row.gated = cfg.gated;
    row.theta = cfg.theta;
    row.theta_t = cfg.theta_t;
    row.theta_h = cfg.theta_h;
    row.n = cfg.n;
    row.n_t = cfg.n_t;
    row.n_h = cfg.n_h;
    row.threshold_c = opts.fixed_threshold;
    if (opts.calibrate) {
      ScenarioConfig null_cfg = null_of(cfg);
      null_cfg.seed = derive_seed(opts.base_seed, i, 0);
      const CalibrationResult cal = calibrate_threshold(null_cfg, opts.run);
      row.threshold_c = cal.threshold_c;
      row.achieved_alpha = cal.achieved_alpha;
      if (opts.on_warning) {
        for (const auto& w : cal.warnings) opts.on_warning(cell.scenario_id + "/" + cell.method + ": " + w);
      }
    }
    cfg.seed = derive_seed(opts.base_seed, i, 1);
    row.result = estimate_power(cfg, row.threshold_c, opts.run);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace wow
