#pragma once
//
// Monte-Carlo operating characteristics: threshold calibration under the
// null, power, and bias/MSE relative to the no-borrowing analysis.
//
// Replicate r of a scenario draws from its own RNG substream derived from
// (seed, r) only, and aggregation always runs in replicate order, so results
// are bitwise identical for any worker count.
//

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wow/model.hpp"
#include "wow/policy.hpp"
#include "wow/waic.hpp"

namespace wow {

enum class Endpoint { binary, continuous };

std::string endpoint_name(Endpoint e);
Endpoint parse_endpoint(const std::string& name);

struct ScenarioConfig {
  Endpoint endpoint = Endpoint::binary;
  double theta = 0.3;    // concurrent control truth
  double theta_t = 0.3;  // treatment truth
  double theta_h = 0.3;  // historical truth
  std::int64_t n = 150;
  std::int64_t n_t = 300;
  std::int64_t n_h = 600;
  double sigma = 1.0;       // continuous: known sampling sd
  double sigma0 = 10.0;     // continuous: vague prior sd
  double vague_mean = 0.0;  // continuous: vague prior centre
  bool plugin_sigma = false;  // continuous: analyse with the sample sd
  BetaShape prior{1.0, 1.0};  // binary vague prior (control and treatment)
  WeightPolicy policy = FixedWeight{0.0};
  bool gated = false;
  double alpha = 0.05;
  std::int64_t reps = 2000;
  std::int64_t calib_reps = 0;  // 0: same as reps
  std::uint64_t seed = 42;
};

void validate(const ScenarioConfig& cfg);

// Effect size (theta_t - theta) / sigma for continuous scenarios.
double effect_size(const ScenarioConfig& cfg);

// Round-half-to-even of n_h * theta_h.
std::int64_t historical_successes(const ScenarioConfig& cfg);
HistoricalBinary historical_binary(const ScenarioConfig& cfg);
HistoricalContinuous historical_continuous(const ScenarioConfig& cfg);

struct ReplicateRecord {
  bool reject = false;
  double statistic = 0.0;  // P(theta_t > theta | data)
  double control_post_mean = 0.0;
  double np_post_mean = 0.0;
  double w_h = 0.0;
  bool gated_out = false;
};

struct CalibrationResult {
  double threshold_c = 0.0;
  double achieved_alpha = 0.0;
  std::int64_t reps_used = 0;
  std::vector<std::string> warnings;
};

struct ScenarioResult {
  double rejection_rate = 0.0;
  double mean_estimate = 0.0;
  double bias = 0.0;
  double mse = 0.0;
  double rel_bias = 0.0;
  double rel_mse = 0.0;
  double mc_stderr = 0.0;      // of the rejection rate
  double rel_bias_se = 0.0;    // MC standard error of rel_bias
  double rel_mse_se = 0.0;
  double mean_weight = 0.0;
  double gated_out_rate = 0.0;
  std::int64_t reps = 0;
};

// 64-bit seed from a base seed and a stream path.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// Precomputes everything that does not depend on the replicate draw (the
// historical summary, the binary borrowing region and per-x weights, the
// treatment survival grids) and then evaluates replicates on demand.
class ScenarioEngine {
 public:
  explicit ScenarioEngine(const ScenarioConfig& cfg);
  ~ScenarioEngine();
  ScenarioEngine(ScenarioEngine&&) noexcept;
  ScenarioEngine& operator=(ScenarioEngine&&) noexcept;

  [[nodiscard]] ReplicateRecord replicate(std::int64_t rep_index, double threshold_c) const;
  [[nodiscard]] const ScenarioConfig& config() const noexcept;
  // Binary only; empty region for continuous scenarios.
  [[nodiscard]] const BorrowingRegionBinary& region() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RunOptions {
  unsigned workers = 0;  // 0: hardware concurrency
};

ReplicateRecord run_replicate(const ScenarioConfig& cfg, std::int64_t rep_index, double threshold_c);

// Replicate records 0..count-1 in index order.
std::vector<ReplicateRecord> run_replicates(const ScenarioEngine& engine, std::int64_t count,
                                            double threshold_c, const RunOptions& opts = {});

// Type-7 empirical quantile.
double empirical_quantile(std::vector<double> values, double prob);

CalibrationResult calibrate_threshold(const ScenarioConfig& cfg_null, const RunOptions& opts = {});

ScenarioResult summarize(const std::vector<ReplicateRecord>& records, double theta);

ScenarioResult estimate_power(const ScenarioConfig& cfg, double threshold_c, const RunOptions& opts = {});

struct SweepCell {
  std::string scenario_id;
  std::string method;
  ScenarioConfig config;
};

struct SweepRow {
  std::string scenario_id;
  std::string method;
  bool gated = false;
  double theta = 0.0;
  double theta_t = 0.0;
  double theta_h = 0.0;
  std::int64_t n = 0;
  std::int64_t n_t = 0;
  std::int64_t n_h = 0;
  double threshold_c = 1.0;
  double achieved_alpha = 0.0;
  ScenarioResult result;
};

struct SweepOptions {
  RunOptions run;
  bool calibrate = false;          // calibrate C per cell under theta_t = theta
  double fixed_threshold = 1.0;    // used when calibrate is false
  std::uint64_t base_seed = 42;
  std::function<void(const std::string&)> on_warning;
};

// Each cell gets seeds derived from (base_seed, cell index): one stream for
// calibration, an independent one for the power run.
std::vector<SweepRow> sweep(const std::vector<SweepCell>& grid, const SweepOptions& opts);

}  // namespace wow
