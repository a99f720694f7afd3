#include <doctest.h>

#include <json.hpp>

#include "wow/config.hpp"
#include "wow/errors.hpp"

using namespace wow;
using nlohmann::json;

namespace {
json base_doc() {
  return json::parse(R"({
    "defaults": {"endpoint": "binary", "n": 150, "n_t": 300, "n_h": 600, "theta_h": 0.3, "reps": 50, "seed": 7,
                 "methods": [{"name": "NP", "policy": "np"},
                             {"name": "Gated SAM", "policy": "sam", "params": {"delta": 0.15}, "gated": true}]},
    "scenarios": [{"id": "1.5", "theta": 0.3, "theta_t": 0.4}]
  })");
}

std::string error_of(const json& doc) {
  try {
    parse_plan(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST_CASE("plan parsing") {
  const auto plan = parse_plan(base_doc());
  REQUIRE(plan.cells.size() == 2);
  CHECK(plan.seed == 7u);
  CHECK(plan.cells[1].method == "Gated SAM");
  CHECK(plan.cells[1].config.gated);
  CHECK(std::holds_alternative<SamWeight>(plan.cells[1].config.policy));
  CHECK(plan.cells[0].config.theta_t == 0.4);
}

TEST_CASE("sweep axes expand") {
  json doc = base_doc();
  doc["scenarios"][0] = {{"id", "fig"}, {"theta", {0.1, 0.2, 0.3}}, {"n_h", {150, 1500}}, {"effect", 0.0}};
  const auto plan = parse_plan(doc);
  CHECK(plan.cells.size() == 12);
  CHECK(plan.cells[0].scenario_id == "fig/theta=0.1/n_h=150");
  CHECK(plan.cells.back().config.theta_t == plan.cells.back().config.theta);
}

TEST_CASE("errors name the JSON path") {
  json doc = base_doc();
  doc["scenarios"][0]["theta"] = "high";
  CHECK(error_of(doc) == "$.scenarios[0].theta: expected a number");

  doc = base_doc();
  doc["defaults"]["methods"][1]["params"]["delta"] = -1;
  CHECK(error_of(doc).rfind("$.defaults.methods[1].params", 0) == 0);

  doc = base_doc();
  doc["scenarios"][0]["thetaa"] = 0.2;
  CHECK(error_of(doc) == "$.scenarios[0].thetaa: unknown key");

  doc = base_doc();
  doc["defaults"]["methods"][0]["policy"] = "bayes";
  CHECK(error_of(doc).rfind("$.defaults.methods[0].policy: unknown policy", 0) == 0);

  doc = base_doc();
  doc["scenarios"][0]["theta"] = 1.3;
  CHECK(error_of(doc).rfind("$.scenarios[0]:", 0) == 0);

  doc = base_doc();
  doc.erase("scenarios");
  CHECK(error_of(doc) == "$.scenarios: missing required key");
}

TEST_CASE("CSV uses 17 significant digits and LF endings") {
  SweepRow r;
  r.scenario_id = "s";
  r.method = "m";
  r.theta = 0.1;
  r.result.rejection_rate = 1.0 / 3.0;
  r.result.reps = 3;
  const std::string csv = rows_to_csv({r});
  CHECK(csv.find("0.10000000000000001") != std::string::npos);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.back() == '\n');
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("JSON rows round-trip") {
  SweepRow r;
  r.scenario_id = "x";
  r.method = "Gated Mix50";
  r.gated = true;
  r.theta = 0.44;
  r.theta_t = 0.54;
  r.theta_h = 0.3;
  r.n = 150;
  r.n_t = 300;
  r.n_h = 600;
  r.threshold_c = 0.9718281828459045;
  r.achieved_alpha = 0.05;
  r.result.rejection_rate = 0.5275;
  r.result.rel_bias = -1.7e-3;
  r.result.rel_mse = 3.1e-4;
  r.result.reps = 2000;
  const auto back = rows_from_json(json::parse(rows_to_json({r}).dump()));
  REQUIRE(back.size() == 1);
  CHECK(back[0].threshold_c == r.threshold_c);
  CHECK(back[0].result.rel_bias == r.result.rel_bias);
  CHECK(back[0].method == r.method);
  CHECK(rows_to_csv(back) == rows_to_csv({r}));
}

TEST_CASE("checksum") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}
