#pragma once
//
// Batch-simulation config documents and tabular serializers.
//
// A config is a JSON object with `defaults` and `scenarios[]`.  Every
// scenario carries ScenarioConfig fields plus `methods[]`, each method being
// {name, policy, params, gated}.  A scenario whose `theta` or `n_h` is an
// array expands into one cell per value (cartesian product), which is how
// curve sweeps are written.  Validation errors name the offending JSON path.
//

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wow/sim.hpp"

namespace wow {

struct SimulationPlan {
  std::vector<SweepCell> cells;
  std::optional<std::uint64_t> seed;  // from defaults.seed
  bool calibrate = true;
  double threshold = 0.975;  // used when calibrate is false
};

// Parses and validates; throws ConfigError("<json path>: <problem>").
SimulationPlan parse_plan(const nlohmann::json& doc);

WeightPolicy parse_policy(const std::string& name, const nlohmann::json& params, const std::string& path);
nlohmann::json policy_to_json(const WeightPolicy& policy);
nlohmann::json config_to_json(const ScenarioConfig& cfg);

// %.17g: shortest lossless-enough decimal for regression baselines.
std::string format_double(double v);

// CSV with header, comma separator, LF endings.
std::string rows_to_csv(const std::vector<SweepRow>& rows);
nlohmann::json rows_to_json(const std::vector<SweepRow>& rows);
std::vector<SweepRow> rows_from_json(const nlohmann::json& doc);
std::string rows_to_table(const std::vector<SweepRow>& rows);

// 64-bit FNV-1a, lower-case hex.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace wow
