#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "wow/cli.hpp"

using namespace wow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {
struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "wow_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

fs::path small_config() {
  const fs::path p = scratch("small.json");
  std::ofstream(p) << R"({
    "defaults": {"endpoint": "binary", "n": 150, "n_t": 300, "n_h": 600, "theta_h": 0.3, "reps": 60,
                 "methods": [{"name": "NP", "policy": "np"}, {"name": "Gated Mix50", "policy": "mix", "gated": true}]},
    "scenarios": [{"id": "1.5", "theta": 0.3, "theta_t": 0.4}]
  })";
  return p;
}
}  // namespace

TEST_CASE("region examples") {
  auto r = cli({"region", "--endpoint", "binary", "--n", "150", "--nh", "600", "--xh", "240"});
  CHECK(r.code == 0);
  CHECK(r.out == "x_L=49 x_U=71\n");
  r = cli({"region", "--endpoint", "binary", "--n", "150", "--nh", "75", "--xh", "30"});
  CHECK(r.out == "x_L=43 x_U=78\n");
  r = cli({"region", "--endpoint", "binary", "--n", "10", "--nh", "10", "--xh", "20"});
  CHECK(r.code == 2);
  CHECK(r.err.find("x_h exceeds n_h") != std::string::npos);
}

TEST_CASE("region full table and sweep") {
  auto r = cli({"region", "--n", "150", "--nh", "600", "--xh", "240", "--full", "--format", "csv"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("x,waic0,waic1,k,borrow\n", 0) == 0);
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 152);
  r = cli({"region", "--n", "150", "--thetah", "0.4", "--sweep-nh", "75,150,600", "--format", "json"});
  const auto j = json::parse(r.out);
  REQUIRE(j.size() == 3);
  CHECK(j[0]["x_L"] == 43);
  CHECK(j[2]["x_U"] == 71);
  r = cli({"region", "--endpoint", "continuous", "--n", "150", "--sigma", "3", "--ybarh", "0", "--nh", "900",
           "--format", "json"});
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["ybar_U"].get<double>() > 0.0);
}

TEST_CASE("gate examples") {
  auto r = cli({"gate", "--endpoint", "binary", "--x", "60", "--n", "150", "--xh", "240", "--nh", "600", "--policy",
                "sam", "--delta", "0.15", "--format", "json"});
  REQUIRE(r.code == 0);
  auto j = json::parse(r.out);
  CHECK(j["borrow"] == true);
  CHECK(j["w_h"].get<double>() > 0.0);
  CHECK(j["ci_lower"].get<double>() < j["posterior_mean"].get<double>());

  r = cli({"gate", "--endpoint", "binary", "--x", "90", "--n", "150", "--xh", "240", "--nh", "600", "--policy", "mix",
           "--w", "0.5", "--format", "json"});
  j = json::parse(r.out);
  CHECK(j["borrow"] == false);
  CHECK(j["w_h"] == 0.0);

  r = cli({"gate", "--endpoint", "continuous", "--ybar", "0.0", "--n", "150", "--sigma", "3", "--ybarh", "0", "--s2h",
           "9", "--nh", "900", "--policy", "fixed", "--w", "1"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("borrow=true\n", 0) == 0);

  CHECK(cli({"gate", "--x", "60", "--n", "150", "--nh", "600"}).code == 2);  // missing --xh
  CHECK(cli({"gate", "--x", "60", "--n", "150", "--xh", "240", "--nh", "600", "--policy", "magic"}).code == 2);
}

TEST_CASE("credible interval brackets the requested mass") {
  auto r = cli({"posterior", "--x", "60", "--n", "150", "--xh", "240", "--nh", "600", "--w", "0.5", "--format",
                "json", "--grid", "5"});
  const auto j = json::parse(r.out);
  CHECK(j["gated"] == false);
  CHECK(j["density"].size() == 5);
  CHECK(j["ci_upper"].get<double>() - j["ci_lower"].get<double>() > 0.01);
}

TEST_CASE("simulate writes rows and a manifest, deterministically") {
  const auto cfg = small_config().string();
  const auto out1 = scratch("a.csv").string();
  const auto out2 = scratch("b.csv").string();
  auto r = cli({"simulate", "--config", cfg, "--out", out1, "--seed", "5", "--workers", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.err.find("unstable") != std::string::npos);  // 60 calibration reps
  cli({"simulate", "--config", cfg, "--out", out2, "--seed", "5", "--workers", "3"});
  CHECK(slurp(out1) == slurp(out2));
  const auto manifest = json::parse(slurp(out1 + ".manifest.json"));
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["rows"] == 2);
  CHECK(manifest.contains("timestamp"));
  CHECK(manifest["config"]["cells"].size() == 2);
  const std::string header = slurp(out1).substr(0, slurp(out1).find('\n'));
  for (const char* col : {"scenario_id", "method", "gated", "theta", "theta_t", "theta_h", "n", "n_t", "n_h", "power",
                          "bias", "mse", "rel_bias", "rel_mse", "mc_stderr", "C"}) {
    CHECK(header.find(col) != std::string::npos);
  }
}

TEST_CASE("seed precedence: flag over WOW_SEED over config") {
  const auto cfg = small_config().string();
  const auto a = scratch("env.csv").string();
  const auto b = scratch("flag.csv").string();
  const auto c = scratch("plain.csv").string();
  setenv("WOW_SEED", "5", 1);
  CHECK(cli({"simulate", "--config", cfg, "--out", a, "--reps", "40"}).code == 0);
  CHECK(cli({"simulate", "--config", cfg, "--out", b, "--reps", "40", "--seed", "5"}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(json::parse(slurp(a + ".manifest.json"))["seed"] == 5);
  setenv("WOW_SEED", "not-a-number", 1);
  CHECK(cli({"simulate", "--config", cfg, "--out", a, "--reps", "40"}).code == 2);
  unsetenv("WOW_SEED");
  CHECK(cli({"simulate", "--config", cfg, "--out", c, "--reps", "40"}).code == 0);
  CHECK(json::parse(slurp(c + ".manifest.json"))["seed"] == 42);
}

TEST_CASE("calibrate subcommand") {
  const auto r = cli({"calibrate", "--config", small_config().string(), "--format", "json", "--reps", "200"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  REQUIRE(j.size() == 2);
  CHECK(j[0]["C"].get<double>() > 0.5);
  CHECK(r.err.find("\"command\": \"calibrate\"") != std::string::npos);  // manifest goes to stderr with stdout output
}

TEST_CASE("exit codes") {
  CHECK(cli({}).code == 2);
  CHECK(cli({"bogus"}).code == 2);
  CHECK(cli({"region", "--n", "abc"}).code == 2);
  const auto bad = scratch("bad.json");
  std::ofstream(bad) << R"({"scenarios": [{"theta": "x", "methods": [{"policy": "np"}]}]})";
  auto r = cli({"simulate", "--config", bad.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("$.scenarios[0].theta") != std::string::npos);
  r = cli({"simulate", "--config", small_config().string(), "--reps", "5", "--out", "/nonexistent-dir/x.csv"});
  CHECK(r.code == 4);
}

TEST_CASE("help lists flags with defaults") {
  auto r = cli({"gate", "--help"});
  CHECK(r.code == 0);
  for (const char* flag : {"--endpoint", "--x", "--xh", "--nh", "--policy", "--w", "--delta", "--gamma", "--tail",
                           "--grid-step", "--level", "--format", "--out", "--ybar", "--sigma0"}) {
    CHECK(r.out.find(flag) != std::string::npos);
  }
  CHECK(r.out.find("0.15") != std::string::npos);
  r = cli({"simulate", "--help"});
  CHECK(r.out.find("--workers") != std::string::npos);
  CHECK(cli({"--version"}).code == 0);
}
