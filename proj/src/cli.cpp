#include "wow/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "wow/config.hpp"
#include "wow/errors.hpp"
#include "wow/model.hpp"
#include "wow/policy.hpp"
#include "wow/sim.hpp"
#include "wow/waic.hpp"

#ifndef WOW_VERSION
#define WOW_VERSION "0.0.0"
#endif

namespace wow {

using nlohmann::json;

namespace {

constexpr const char* kFormats = "table|csv|json";

// ---------------------------------------------------------------------------
// shared option groups

struct BinaryFlags {
  std::optional<std::int64_t> x, n, xh, nh;
  double a = 1.0, b = 1.0;
};

struct ContinuousFlags {
  std::optional<double> ybar, ybarh, s2h;
  std::optional<std::int64_t> n, nh;
  double sigma = 1.0, sigma0 = 10.0, mu0 = 0.0;
};

struct PolicyFlags {
  std::string policy = "mix";
  double w = 0.5;
  double delta = 0.15;
  double gamma = 0.8;
  std::string tail = "two_sided";
  double grid_step = 0.01;
};

struct OutputFlags {
  std::string format = "table";
  std::string out = "-";
};

void add_output(CLI::App* app, OutputFlags& f) {
  app->add_option("--format", f.format, "Output format")
      ->check(CLI::IsMember({"table", "csv", "json"}))
      ->capture_default_str()
      ->type_name(kFormats);
  app->add_option("--out", f.out, "Output file path; '-' writes to stdout")->capture_default_str();
}

void add_binary_data(CLI::App* app, BinaryFlags& f, bool with_x) {
  if (with_x) app->add_option("--x", f.x, "Concurrent control successes (count; binary)");
  app->add_option("--n", f.n, "Concurrent control sample size (count)");
  app->add_option("--xh", f.xh, "Historical successes (count; binary)");
  app->add_option("--nh", f.nh, "Historical sample size (count)");
  app->add_option("--a", f.a, "Vague Beta prior shape a (binary)")->capture_default_str();
  app->add_option("--b", f.b, "Vague Beta prior shape b (binary)")->capture_default_str();
}

void add_continuous_data(CLI::App* app, ContinuousFlags& f, bool with_ybar) {
  if (with_ybar) app->add_option("--ybar", f.ybar, "Concurrent control sample mean (outcome units; continuous)");
  app->add_option("--ybarh", f.ybarh, "Historical sample mean (outcome units; continuous)");
  app->add_option("--s2h", f.s2h, "Historical variance estimate (squared outcome units; default sigma^2)");
  app->add_option("--sigma", f.sigma, "Known sampling sd (outcome units; continuous)")->capture_default_str();
  app->add_option("--sigma0", f.sigma0, "Vague prior sd (outcome units; continuous)")->capture_default_str();
  app->add_option("--mu0", f.mu0, "Vague prior mean (outcome units; continuous)")->capture_default_str();
}

void add_policy(CLI::App* app, PolicyFlags& f) {
  app->add_option("--policy", f.policy, "Weight policy")
      ->check(CLI::IsMember({"np", "fixed", "mix", "sam", "ebrmap"}))
      ->capture_default_str();
  app->add_option("--w", f.w, "Fixed prior weight for fixed/mix (probability)")->capture_default_str();
  app->add_option("--delta", f.delta, "SAM clinically meaningful shift (outcome scale)")->capture_default_str();
  app->add_option("--gamma", f.gamma, "EB-rMAP PPP threshold (probability)")->capture_default_str();
  app->add_option("--tail", f.tail, "EB-rMAP PPP tail")
      ->check(CLI::IsMember({"lower", "upper", "two_sided"}))
      ->capture_default_str();
  app->add_option("--grid-step", f.grid_step, "EB-rMAP weight grid step (probability)")->capture_default_str();
}

WeightPolicy make_policy(const PolicyFlags& f) {
  WeightPolicy p;
  if (f.policy == "np") {
    p = FixedWeight{0.0};
  } else if (f.policy == "fixed" || f.policy == "mix") {
    p = FixedWeight{f.w};
  } else if (f.policy == "sam") {
    p = SamWeight{f.delta};
  } else {
    p = EbRmapWeight{f.gamma, parse_tail(f.tail), f.grid_step};
  }
  validate(p);
  return p;
}

template <class T>
T require(const std::optional<T>& v, const char* flag, const std::string& endpoint) {
  if (!v) throw ConfigError(std::string(flag) + " is required for the " + endpoint + " endpoint");
  return *v;
}

HistoricalBinary binary_hist(const BinaryFlags& f) {
  HistoricalBinary h{require(f.xh, "--xh", "binary"), require(f.nh, "--nh", "binary")};
  validate(h);
  return h;
}

HistoricalContinuous continuous_hist(const ContinuousFlags& f) {
  HistoricalContinuous h;
  h.ybar_h = require(f.ybarh, "--ybarh", "continuous");
  h.n_h = require(f.nh, "--nh", "continuous");
  h.s2_h = f.s2h.value_or(f.sigma * f.sigma);
  h.vague_mean = f.mu0;
  h.vague_sd = f.sigma0;
  validate(h);
  return h;
}

// ---------------------------------------------------------------------------
// output plumbing

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

std::string csv_line(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  return s + '\n';
}

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::int64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

std::uint64_t resolve_seed(const std::optional<std::string>& flag, std::optional<std::uint64_t> config_seed) {
  auto parse = [](const std::string& text, const std::string& source) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      if (text.empty() || text[0] == '-') throw std::invalid_argument("negative");
      v = std::stoull(text, &used, 10);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != text.size()) {
      throw ConfigError(source + ": '" + text + "' is not an unsigned 64-bit integer");
    }
    return static_cast<std::uint64_t>(v);
  };
  if (flag) return parse(*flag, "--seed");
  if (const char* env = std::getenv("WOW_SEED"); env && *env) return parse(env, "WOW_SEED");
  return config_seed.value_or(42);
}

// ---------------------------------------------------------------------------
// region

struct RegionFlags {
  std::string endpoint = "binary";
  BinaryFlags bin;
  ContinuousFlags con;
  std::optional<double> thetah;
  std::vector<std::int64_t> sweep_nh;
  bool full = false;
  OutputFlags output;
};

std::string region_binary(const RegionFlags& f) {
  const BetaShape prior{f.bin.a, f.bin.b};
  validate(prior);
  const std::int64_t n = require(f.bin.n, "--n", "binary");
  if (n < 1) throw ConfigError("--n must be >= 1");

  if (!f.sweep_nh.empty()) {
    double theta_h = 0.0;
    if (f.thetah) {
      theta_h = *f.thetah;
    } else {
      const HistoricalBinary h = binary_hist(f.bin);
      theta_h = static_cast<double>(h.x_h) / static_cast<double>(h.n_h);
    }
    if (!(theta_h >= 0.0 && theta_h <= 1.0)) throw ConfigError("--thetah must lie in [0, 1]");
    json rows = json::array();
    std::string csv = csv_line({"n", "n_h", "x_h", "x_L", "x_U", "empty"});
    std::ostringstream table;
    for (std::int64_t nh : f.sweep_nh) {
      if (nh < 1) throw ConfigError("--sweep-nh values must be >= 1");
      const HistoricalBinary h{static_cast<std::int64_t>(std::nearbyint(static_cast<double>(nh) * theta_h)), nh};
      const auto r = borrowing_region_binary(prior, n, h);
      rows.push_back({{"n", n}, {"n_h", nh}, {"x_h", h.x_h}, {"x_L", r.x_lower}, {"x_U", r.x_upper}, {"empty", r.empty}});
      csv += csv_line({fmt(n), fmt(nh), fmt(h.x_h), fmt(r.x_lower), fmt(r.x_upper), fmt(r.empty)});
      table << "n_h=" << nh << " x_h=" << h.x_h << ' '
            << (r.empty ? std::string("empty") : "x_L=" + std::to_string(r.x_lower) + " x_U=" + std::to_string(r.x_upper))
            << '\n';
    }
    if (f.output.format == "json") return rows.dump(2) + '\n';
    return f.output.format == "csv" ? csv : table.str();
  }

  const HistoricalBinary h = binary_hist(f.bin);
  const BorrowingRegionBinary r = borrowing_region_binary(prior, n, h);
  const std::vector<RegionRow> rows = f.full ? region_table_binary(prior, n, h) : std::vector<RegionRow>{};

  if (f.output.format == "json") {
    json j = {{"endpoint", "binary"}, {"n", n},           {"n_h", h.n_h},        {"x_h", h.x_h},
              {"x_L", r.x_lower},     {"x_U", r.x_upper}, {"empty", r.empty},    {"connected", r.connected}};
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    if (f.full) {
      j["table"] = json::array();
      for (const auto& row : rows) {
        j["table"].push_back({{"x", row.x}, {"waic0", row.waic0}, {"waic1", row.waic1}, {"k", row.k}, {"borrow", row.borrow}});
      }
    }
    return j.dump(2) + '\n';
  }
  if (f.output.format == "csv") {
    if (!f.full) {
      return csv_line({"n", "n_h", "x_h", "x_L", "x_U", "empty"}) +
             csv_line({fmt(n), fmt(h.n_h), fmt(h.x_h), fmt(r.x_lower), fmt(r.x_upper), fmt(r.empty)});
    }
    std::string s = csv_line({"x", "waic0", "waic1", "k", "borrow"});
    for (const auto& row : rows) s += csv_line({fmt(row.x), fmt(row.waic0), fmt(row.waic1), fmt(row.k), fmt(row.borrow)});
    return s;
  }
  std::ostringstream os;
  if (r.empty) {
    os << "empty borrowing region\n";
  } else {
    os << "x_L=" << r.x_lower << " x_U=" << r.x_upper << '\n';
  }
  if (!r.diagnostic.empty()) os << "note: " << r.diagnostic << '\n';
  if (f.full) {
    os << std::setw(6) << "x" << std::setw(16) << "WAIC0" << std::setw(16) << "WAIC1" << std::setw(14) << "k"
       << "  borrow\n";
    os << std::fixed;
    for (const auto& row : rows) {
      os << std::setw(6) << row.x << std::setprecision(6) << std::setw(16) << row.waic0 << std::setw(16) << row.waic1
         << std::setw(14) << row.k << "  " << (row.borrow ? "yes" : "no") << '\n';
    }
  }
  return os.str();
}

std::string region_continuous(const RegionFlags& f, std::ostream& err) {
  const HistoricalContinuous h = continuous_hist(f.con);
  if (auto w = h.vague_prior_warning()) err << "warning: " << *w << '\n';
  const std::int64_t n = require(f.con.n, "--n", "continuous");
  if (!f.sweep_nh.empty()) throw ConfigError("--sweep-nh is only available for the binary endpoint");
  const BorrowingRegionContinuous r = borrowing_region_continuous(h, n, f.con.sigma);
  if (f.output.format == "json") {
    json j = {{"endpoint", "continuous"}, {"n", n}, {"n_h", h.n_h}, {"ybar_h", h.ybar_h}, {"ybar_L", r.ybar_lower},
              {"ybar_U", r.ybar_upper}, {"empty", r.empty}, {"sign_changes", r.sign_changes}};
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    return j.dump(2) + '\n';
  }
  if (f.output.format == "csv") {
    return csv_line({"n", "n_h", "ybar_h", "ybar_L", "ybar_U", "empty"}) +
           csv_line({fmt(n), fmt(h.n_h), fmt(h.ybar_h), fmt(r.ybar_lower), fmt(r.ybar_upper), fmt(r.empty)});
  }
  std::ostringstream os;
  if (r.empty) {
    os << "empty borrowing region\n";
  } else {
    os << std::setprecision(10) << "ybar_L=" << r.ybar_lower << " ybar_U=" << r.ybar_upper << '\n';
  }
  if (!r.diagnostic.empty()) os << "note: " << r.diagnostic << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// gate / posterior

struct VerdictFlags {
  std::string endpoint = "binary";
  BinaryFlags bin;
  ContinuousFlags con;
  PolicyFlags policy;
  bool gated = true;
  double level = 0.95;
  int grid = 0;
  OutputFlags output;
};

struct Verdict {
  std::string endpoint;
  std::string policy;
  bool gated = true;
  GateDecision gate;
  WeightDecision weight;
  double w_star = 0.0;
  double log_z_h = 0.0;
  double log_z_0 = 0.0;
  double mean = 0.0;
  double ci_lower = 0.0;
  double ci_upper = 0.0;
  double level = 0.95;
  json components;
  std::vector<std::array<double, 3>> density;  // (u, pdf, cdf)
};

template <class Post>
void fill_posterior(Verdict& v, const Post& post, double level, int grid, double lo, double hi) {
  constexpr double kTol = 1e-8;
  v.w_star = post.w_star;
  v.log_z_h = post.log_z_h;
  v.log_z_0 = post.log_z_0;
  v.mean = posterior_mean(post);
  v.ci_lower = post.quantile(0.5 * (1.0 - level), kTol);
  v.ci_upper = post.quantile(0.5 * (1.0 + level), kTol);
  for (int i = 0; i < grid; ++i) {
    const double u = grid == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (grid - 1);
    v.density.push_back({u, post.density(u), post.cdf(u)});
  }
}

Verdict evaluate(const VerdictFlags& f, std::ostream& err) {
  if (!(f.level > 0.0 && f.level < 1.0)) throw ConfigError("--level must lie in (0, 1)");
  if (f.grid < 0) throw ConfigError("--grid must be >= 0");
  Verdict v;
  v.endpoint = f.endpoint;
  v.gated = f.gated;
  v.level = f.level;
  const WeightPolicy policy = make_policy(f.policy);
  v.policy = policy_name(policy);

  if (f.endpoint == "binary") {
    const BetaShape prior{f.bin.a, f.bin.b};
    validate(prior);
    const HistoricalBinary h = binary_hist(f.bin);
    const BinaryDataset d{require(f.bin.x, "--x", "binary"), require(f.bin.n, "--n", "binary")};
    validate(d);
    const BinaryInputs in{prior, d, h};
    v.gate = gate_binary(prior, d, h);
    v.weight = f.gated ? gated(policy, v.gate, in) : apply_policy(policy, in);
    const auto post = binary_posterior(prior, d, h, v.weight.w_h);
    fill_posterior(v, post, f.level, f.grid, 0.0, 1.0);
    v.components = {{"borrow", {{"a", post.borrow.a}, {"b", post.borrow.b}}},
                    {"noborrow", {{"a", post.noborrow.a}, {"b", post.noborrow.b}}}};
  } else {
    const HistoricalContinuous h = continuous_hist(f.con);
    if (auto w = h.vague_prior_warning()) err << "warning: " << *w << '\n';
    const ContinuousStats d = ContinuousStats::from_population_moments(
        require(f.con.n, "--n", "continuous"), require(f.con.ybar, "--ybar", "continuous"), f.con.sigma);
    validate(d);
    const ContinuousInputs in{h, d};
    v.gate = gate_continuous(h, d);
    v.weight = f.gated ? gated(policy, v.gate, in) : apply_policy(policy, in);
    const auto post = continuous_posterior(h, d, v.weight.w_h);
    const double spread = 6.0 * std::sqrt(std::max(post.tau2_0, post.tau2_h));
    const double centre = posterior_mean(post);
    fill_posterior(v, post, f.level, f.grid, centre - spread, centre + spread);
    v.components = {{"borrow", {{"mean", post.mu_h}, {"var", post.tau2_h}}},
                    {"noborrow", {{"mean", post.mu_0}, {"var", post.tau2_0}}}};
  }
  return v;
}

json verdict_json(const Verdict& v) {
  json j = {{"endpoint", v.endpoint},
            {"policy", v.policy},
            {"gated", v.gated},
            {"borrow", v.gate.borrow},
            {"k", v.gate.k},
            {"waic0", v.gate.waic0.total},
            {"waic1", v.gate.waic1.total},
            {"w_h", v.weight.w_h},
            {"gated_out", v.weight.gated_out},
            {"w_star", v.w_star},
            {"log_z_h", v.log_z_h},
            {"log_z_0", v.log_z_0},
            {"posterior_mean", v.mean},
            {"ci_level", v.level},
            {"ci_lower", v.ci_lower},
            {"ci_upper", v.ci_upper},
            {"components", v.components}};
  if (!v.weight.diagnostics.empty()) j["diagnostics"] = v.weight.diagnostics;
  if (!v.density.empty()) {
    j["density"] = json::array();
    for (const auto& [u, pdf, cdf] : v.density) j["density"].push_back({{"u", u}, {"pdf", pdf}, {"cdf", cdf}});
  }
  return j;
}

std::string render_verdict(const Verdict& v, const std::string& format) {
  if (format == "json") return verdict_json(v).dump(2) + '\n';
  if (format == "csv") {
    if (!v.density.empty()) {
      std::string s = csv_line({"u", "pdf", "cdf"});
      for (const auto& [u, pdf, cdf] : v.density) s += csv_line({fmt(u), fmt(pdf), fmt(cdf)});
      return s;
    }
    return csv_line({"endpoint", "policy", "gated", "borrow", "k", "waic0", "waic1", "w_h", "w_star",
                     "posterior_mean", "ci_lower", "ci_upper"}) +
           csv_line({v.endpoint, v.policy, fmt(v.gated), fmt(v.gate.borrow), fmt(v.gate.k), fmt(v.gate.waic0.total),
                     fmt(v.gate.waic1.total), fmt(v.weight.w_h), fmt(v.w_star), fmt(v.mean), fmt(v.ci_lower),
                     fmt(v.ci_upper)});
  }
  std::ostringstream os;
  os << std::setprecision(8);
  os << "borrow=" << fmt(v.gate.borrow) << '\n'
     << "k=" << v.gate.k << '\n'
     << "waic0=" << v.gate.waic0.total << '\n'
     << "waic1=" << v.gate.waic1.total << '\n'
     << "policy=" << v.policy << (v.gated ? " (gated)" : "") << '\n'
     << "w_h=" << v.weight.w_h << '\n'
     << "w_star=" << v.w_star << '\n'
     << "posterior_mean=" << v.mean << '\n'
     << "ci" << std::lround(100.0 * v.level) << "=[" << v.ci_lower << ", " << v.ci_upper << "]\n";
  for (const auto& [key, value] : v.weight.diagnostics) os << key << '=' << value << '\n';
  for (const auto& [u, pdf, cdf] : v.density) os << "u=" << u << " pdf=" << pdf << " cdf=" << cdf << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// simulate / calibrate

struct BatchFlags {
  std::string config;
  std::optional<std::string> seed;
  std::optional<std::int64_t> reps;
  std::optional<std::int64_t> calib_reps;
  unsigned workers = 0;
  bool no_calibrate = false;
  std::optional<double> threshold;
  OutputFlags output;
};

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

SimulationPlan load_plan(const BatchFlags& f, std::uint64_t& seed) {
  SimulationPlan plan = parse_plan(load_config(f.config));
  seed = resolve_seed(f.seed, plan.seed);
  if (f.reps && *f.reps < 1) throw ConfigError("--reps must be >= 1");
  if (f.calib_reps && *f.calib_reps < 1) throw ConfigError("--calib-reps must be >= 1");
  for (auto& cell : plan.cells) {
    if (f.reps) {
      cell.config.reps = *f.reps;
      cell.config.calib_reps = 0;
    }
    if (f.calib_reps) cell.config.calib_reps = *f.calib_reps;
  }
  if (f.no_calibrate) plan.calibrate = false;
  if (f.threshold) plan.threshold = *f.threshold;
  return plan;
}

std::string output_format(const OutputFlags& o, bool format_given) {
  if (format_given) return o.format;
  const auto ends_with = [&](const char* ext) {
    const std::string e(ext);
    return o.out.size() >= e.size() && o.out.compare(o.out.size() - e.size(), e.size(), e) == 0;
  };
  if (ends_with(".json")) return "json";
  if (o.out == "-") return "table";
  return "csv";
}

json resolved_cells(const SimulationPlan& plan) {
  json cells = json::array();
  for (const auto& c : plan.cells) {
    json j = config_to_json(c.config);
    j.erase("seed");
    j["scenario_id"] = c.scenario_id;
    j["method_name"] = c.method;
    cells.push_back(std::move(j));
  }
  return cells;
}

void emit_with_manifest(const std::string& command, const BatchFlags& f, const SimulationPlan& plan,
                        std::uint64_t seed, const std::string& text, std::size_t row_count,
                        const std::vector<std::string>& warnings, std::ostream& out, std::ostream& err) {
  write_text(f.output.out, text, out);
  json manifest = {{"tool", "wow"},
                   {"version", WOW_VERSION},
                   {"command", command},
                   {"config_path", f.config},
                   {"config",
                    {{"calibrate", plan.calibrate},
                     {"threshold", plan.threshold},
                     {"workers", f.workers},
                     {"cells", resolved_cells(plan)}}},
                   {"seed", seed},
                   {"seed_derivation", "cell i: calibration stream derive(seed, i, 0), power stream derive(seed, i, 1)"},
                   {"timestamp", utc_timestamp()},
                   {"output", f.output.out},
                   {"rows", row_count},
                   {"checksum", {{"algorithm", "fnv1a64"}, {"value", fnv1a_hex(text)}}},
                   {"warnings", warnings}};
  const std::string body = manifest.dump(2) + '\n';
  if (f.output.out == "-") {
    err << body;
  } else {
    write_text(f.output.out + ".manifest.json", body, out);
  }
}

void add_batch(CLI::App* app, BatchFlags& f) {
  app->add_option("--config", f.config, "Scenario config file (JSON; see docs/config.schema.json)")
      ->required()
      ->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "Base seed (unsigned 64-bit); falls back to WOW_SEED, then defaults.seed, then 42");
  app->add_option("--reps", f.reps, "Override replicate count for every cell (count)");
  app->add_option("--calib-reps", f.calib_reps, "Override calibration replicate count (count)");
  app->add_option("--workers", f.workers, "Worker threads; 0 uses all hardware threads (count)")->capture_default_str();
  add_output(app, f.output);
}

int cmd_simulate(const BatchFlags& f, bool format_given, std::ostream& out, std::ostream& err) {
  std::uint64_t seed = 0;
  const SimulationPlan plan = load_plan(f, seed);
  std::vector<std::string> warnings;
  SweepOptions opts;
  opts.run.workers = f.workers;
  opts.calibrate = plan.calibrate;
  opts.fixed_threshold = plan.threshold;
  opts.base_seed = seed;
  opts.on_warning = [&](const std::string& w) {
    warnings.push_back(w);
    err << "warning: " << w << '\n';
  };
  const std::vector<SweepRow> rows = sweep(plan.cells, opts);
  const std::string format = output_format(f.output, format_given);
  std::string text;
  if (format == "json") {
    text = rows_to_json(rows).dump(2) + '\n';
  } else if (format == "csv") {
    text = rows_to_csv(rows);
  } else {
    text = rows_to_table(rows);
  }
  emit_with_manifest("simulate", f, plan, seed, text, rows.size(), warnings, out, err);
  return kExitOk;
}

int cmd_calibrate(const BatchFlags& f, bool format_given, std::ostream& out, std::ostream& err) {
  std::uint64_t seed = 0;
  const SimulationPlan plan = load_plan(f, seed);
  RunOptions run;
  run.workers = f.workers;
  std::vector<std::string> warnings;
  json rows = json::array();
  std::string csv = csv_line({"scenario_id", "method", "gated", "theta", "theta_h", "n", "n_t", "n_h", "alpha", "C",
                              "achieved_alpha", "reps_used"});
  std::ostringstream table;
  table << std::left << std::setw(16) << "scenario" << std::setw(16) << "method" << std::right << std::setw(10) << "C"
        << std::setw(10) << "alpha" << std::setw(8) << "reps" << '\n';
  for (std::size_t i = 0; i < plan.cells.size(); ++i) {
    const SweepCell& cell = plan.cells[i];
    ScenarioConfig null_cfg = cell.config;
    null_cfg.theta_t = null_cfg.theta;
    null_cfg.seed = derive_seed(seed, i, 0);
    const CalibrationResult r = calibrate_threshold(null_cfg, run);
    for (const auto& w : r.warnings) {
      warnings.push_back(cell.scenario_id + "/" + cell.method + ": " + w);
      err << "warning: " << warnings.back() << '\n';
    }
    const ScenarioConfig& c = cell.config;
    rows.push_back({{"scenario_id", cell.scenario_id}, {"method", cell.method}, {"gated", c.gated},
                    {"theta", c.theta}, {"theta_h", c.theta_h}, {"n", c.n}, {"n_t", c.n_t}, {"n_h", c.n_h},
                    {"alpha", c.alpha}, {"C", r.threshold_c}, {"achieved_alpha", r.achieved_alpha},
                    {"reps_used", r.reps_used}});
    csv += csv_line({cell.scenario_id, cell.method, fmt(c.gated), fmt(c.theta), fmt(c.theta_h), fmt(c.n), fmt(c.n_t),
                     fmt(c.n_h), fmt(c.alpha), fmt(r.threshold_c), fmt(r.achieved_alpha), fmt(r.reps_used)});
    table << std::left << std::setw(16) << cell.scenario_id << std::setw(16) << cell.method << std::right
          << std::fixed << std::setprecision(6) << std::setw(10) << r.threshold_c << std::setprecision(4)
          << std::setw(10) << r.achieved_alpha << std::setw(8) << r.reps_used << '\n';
  }
  const std::string format = output_format(f.output, format_given);
  const std::string text = format == "json" ? rows.dump(2) + '\n' : format == "csv" ? csv : table.str();
  emit_with_manifest("calibrate", f, plan, seed, text, plan.cells.size(), warnings, out, err);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"WAIC-optimized gating for Bayesian borrowing of historical controls", "wow"};
  app.set_version_flag("--version", WOW_VERSION);
  app.require_subcommand(1);

  RegionFlags region;
  auto* region_cmd = app.add_subcommand("region", "Borrowing region (and optional per-x decision table)");
  region_cmd->add_option("--endpoint", region.endpoint, "Endpoint type")
      ->check(CLI::IsMember({"binary", "continuous"}))
      ->capture_default_str();
  add_binary_data(region_cmd, region.bin, false);
  add_continuous_data(region_cmd, region.con, false);
  region_cmd->add_flag("--full", region.full, "Print the per-x table (x, WAIC0, WAIC1, k, borrow)");
  region_cmd->add_option("--sweep-nh", region.sweep_nh,
                         "Historical sizes to sweep (counts); x_h = round(n_h * thetah)")
      ->delimiter(',');
  region_cmd->add_option("--thetah", region.thetah, "Historical response rate for --sweep-nh (probability)");
  add_output(region_cmd, region.output);

  VerdictFlags gate;
  auto* gate_cmd = app.add_subcommand("gate", "Gating verdict, policy weight and posterior summary for observed data");
  VerdictFlags post;
  post.gated = false;
  auto* post_cmd = app.add_subcommand("posterior", "Mixture posterior summary (ungated unless --gated)");
  for (auto [cmd, flags] : {std::pair{gate_cmd, &gate}, std::pair{post_cmd, &post}}) {
    cmd->add_option("--endpoint", flags->endpoint, "Endpoint type")
        ->check(CLI::IsMember({"binary", "continuous"}))
        ->capture_default_str();
    add_binary_data(cmd, flags->bin, true);
    add_continuous_data(cmd, flags->con, true);
    // --n and --nh are shared between endpoints.
    add_policy(cmd, flags->policy);
    cmd->add_option("--level", flags->level, "Credible interval level (probability)")->capture_default_str();
    cmd->add_option("--grid", flags->grid, "Density/cdf grid points to emit (count)")->capture_default_str();
    add_output(cmd, flags->output);
  }
  gate_cmd->add_flag("!--ungated", gate.gated, "Skip the gate and apply the policy directly");
  post_cmd->add_flag("--gated", post.gated, "Apply the gate before the policy");

  BatchFlags sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Calibrate-then-power simulation over a scenario config");
  add_batch(sim_cmd, sim);
  sim_cmd->add_flag("--no-calibrate", sim.no_calibrate, "Skip calibration and use --threshold");
  sim_cmd->add_option("--threshold", sim.threshold, "Decision threshold C when not calibrating (probability)");

  BatchFlags cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Calibrate the decision threshold C per cell under the null");
  add_batch(cal_cmd, cal);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  // The shared --n / --nh flags populate whichever endpoint group was used.
  auto sync = [](ContinuousFlags& c, const BinaryFlags& b) {
    c.n = b.n;
    c.nh = b.nh;
  };
  sync(region.con, region.bin);
  sync(gate.con, gate.bin);
  sync(post.con, post.bin);

  try {
    if (region_cmd->parsed()) {
      const std::string text =
          region.endpoint == "binary" ? region_binary(region) : region_continuous(region, err);
      write_text(region.output.out, text, out);
    } else if (gate_cmd->parsed() || post_cmd->parsed()) {
      const VerdictFlags& f = gate_cmd->parsed() ? gate : post;
      write_text(f.output.out, render_verdict(evaluate(f, err), f.output.format), out);
    } else if (sim_cmd->parsed()) {
      return cmd_simulate(sim, sim_cmd->count("--format") > 0, out, err);
    } else if (cal_cmd->parsed()) {
      return cmd_calibrate(cal, cal_cmd->count("--format") > 0, out, err);
    }
  } catch (const IntegrityError& e) {
    err << "integrity error: " << e.what() << '\n';
    return kExitIntegrity;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {  // ConfigError
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {  // DomainError
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace wow
