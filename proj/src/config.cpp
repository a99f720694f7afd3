#include "wow/config.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <set>
#include <sstream>

#include "wow/errors.hpp"

namespace wow {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "expected a finite number");
  return d;
}

std::int64_t as_count(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected an integer");
  return v.get<std::int64_t>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) fail(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(path, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail(path + "." + key, "unknown key");
  }
}

const std::set<std::string> kScenarioKeys = {
    "id",    "endpoint", "theta",  "theta_t",      "theta_h", "effect", "n",     "n_t",  "n_h",
    "sigma", "sigma0",   "vague_mean", "plugin_sigma", "prior", "alpha",  "reps", "calib_reps", "methods"};

// Scalar ScenarioConfig fields; sweep axes (theta, n_h) arrive as scalars here.
void apply_fields(ScenarioConfig& cfg, const json& obj, const std::string& path) {
  if (const json* v = find(obj, "endpoint")) {
    try {
      cfg.endpoint = parse_endpoint(as_string(*v, path + ".endpoint"));
    } catch (const ConfigError& e) {
      if (std::string(e.what()).rfind(path, 0) == 0) throw;
      fail(path + ".endpoint", e.what());
    }
  }
  auto num = [&](const char* key, double& dst) {
    if (const json* v = find(obj, key)) dst = as_number(*v, path + "." + key);
  };
  auto cnt = [&](const char* key, std::int64_t& dst) {
    if (const json* v = find(obj, key)) dst = as_count(*v, path + "." + key);
  };
  num("theta", cfg.theta);
  num("theta_t", cfg.theta_t);
  num("theta_h", cfg.theta_h);
  cnt("n", cfg.n);
  cnt("n_t", cfg.n_t);
  cnt("n_h", cfg.n_h);
  num("sigma", cfg.sigma);
  num("sigma0", cfg.sigma0);
  num("vague_mean", cfg.vague_mean);
  num("alpha", cfg.alpha);
  cnt("reps", cfg.reps);
  cnt("calib_reps", cfg.calib_reps);
  if (const json* v = find(obj, "plugin_sigma")) cfg.plugin_sigma = as_bool(*v, path + ".plugin_sigma");
  if (const json* v = find(obj, "prior")) {
    const std::string p = path + ".prior";
    check_keys(*v, p, {"a", "b"});
    if (const json* a = find(*v, "a")) cfg.prior.a = as_number(*a, p + ".a");
    if (const json* b = find(*v, "b")) cfg.prior.b = as_number(*b, p + ".b");
  }
}

struct MethodSpec {
  std::string name;
  WeightPolicy policy;
  bool gated = false;
};

std::vector<MethodSpec> parse_methods(const json& arr, const std::string& path) {
  if (!arr.is_array() || arr.empty()) fail(path, "expected a non-empty array of methods");
  std::vector<MethodSpec> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    const json& m = arr[i];
    check_keys(m, p, {"name", "policy", "params", "gated"});
    const json* policy = find(m, "policy");
    if (!policy) fail(p + ".policy", "missing required key");
    MethodSpec spec;
    const std::string policy_str = as_string(*policy, p + ".policy");
    const json* params = find(m, "params");
    spec.policy = parse_policy(policy_str, params ? *params : json::object(), p + ".params");
    if (const json* g = find(m, "gated")) spec.gated = as_bool(*g, p + ".gated");
    spec.name = find(m, "name") ? as_string(m["name"], p + ".name")
                                : (spec.gated ? "gated_" : "") + policy_name(spec.policy);
    if (!names.insert(spec.name).second) fail(p + ".name", "duplicate method name '" + spec.name + "'");
    out.push_back(std::move(spec));
  }
  return out;
}

// Values of a sweepable axis: a scalar or a non-empty array.
std::vector<json> axis_values(const json& obj, const char* key, const std::string& path) {
  const json* v = find(obj, key);
  if (!v) return {json()};
  if (v->is_array()) {
    if (v->empty()) fail(path + "." + key, "sweep array must not be empty");
    return std::vector<json>(v->begin(), v->end());
  }
  return {*v};
}

std::string axis_suffix(const char* key, const json& v) {
  if (v.is_null()) return "";
  std::ostringstream os;
  os << "/" << key << "=" << v.dump();
  return os.str();
}

}  // namespace

WeightPolicy parse_policy(const std::string& name, const json& params, const std::string& path) {
  if (!params.is_object()) fail(path, "expected an object");
  auto num = [&](const char* key, double fallback) {
    const json* v = find(params, key);
    return v ? as_number(*v, path + "." + key) : fallback;
  };
  WeightPolicy policy;
  if (name == "np") {
    check_keys(params, path, {});
    policy = FixedWeight{0.0};
  } else if (name == "fixed" || name == "mix") {
    check_keys(params, path, {"w"});
    policy = FixedWeight{num("w", 0.5)};
  } else if (name == "sam") {
    check_keys(params, path, {"delta"});
    policy = SamWeight{num("delta", 0.15)};
  } else if (name == "ebrmap") {
    check_keys(params, path, {"gamma", "tail", "grid_step"});
    EbRmapWeight eb;
    eb.gamma = num("gamma", eb.gamma);
    eb.grid_step = num("grid_step", eb.grid_step);
    if (const json* t = find(params, "tail")) {
      try {
        eb.tail = parse_tail(as_string(*t, path + ".tail"));
      } catch (const ConfigError& e) {
        fail(path + ".tail", e.what());
      }
    }
    policy = eb;
  } else {
    fail(path.substr(0, path.rfind('.')) + ".policy",
         "unknown policy '" + name + "' (expected np, fixed, mix, sam or ebrmap)");
  }
  try {
    validate(policy);
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return policy;
}

json policy_to_json(const WeightPolicy& policy) {
  json j;
  j["policy"] = policy_name(policy);
  if (const auto* f = std::get_if<FixedWeight>(&policy)) {
    j["params"] = {{"w", f->w}};
  } else if (const auto* s = std::get_if<SamWeight>(&policy)) {
    j["params"] = {{"delta", s->delta}};
  } else if (const auto* e = std::get_if<EbRmapWeight>(&policy)) {
    j["params"] = {{"gamma", e->gamma}, {"tail", tail_name(e->tail)}, {"grid_step", e->grid_step}};
  }
  return j;
}

json config_to_json(const ScenarioConfig& cfg) {
  json j = {{"endpoint", endpoint_name(cfg.endpoint)},
            {"theta", cfg.theta},
            {"theta_t", cfg.theta_t},
            {"theta_h", cfg.theta_h},
            {"n", cfg.n},
            {"n_t", cfg.n_t},
            {"n_h", cfg.n_h},
            {"alpha", cfg.alpha},
            {"reps", cfg.reps},
            {"calib_reps", cfg.calib_reps},
            {"gated", cfg.gated},
            {"seed", cfg.seed}};
  if (cfg.endpoint == Endpoint::binary) {
    j["prior"] = {{"a", cfg.prior.a}, {"b", cfg.prior.b}};
  } else {
    j["sigma"] = cfg.sigma;
    j["sigma0"] = cfg.sigma0;
    j["vague_mean"] = cfg.vague_mean;
    j["plugin_sigma"] = cfg.plugin_sigma;
  }
  j["method"] = policy_to_json(cfg.policy);
  return j;
}

SimulationPlan parse_plan(const json& doc) {
  check_keys(doc, "$", {"defaults", "scenarios"});
  SimulationPlan plan;
  ScenarioConfig base;
  json default_methods;
  std::optional<double> default_effect;
  if (const json* d = find(doc, "defaults")) {
    std::set<std::string> keys = kScenarioKeys;
    keys.erase("id");
    keys.insert({"seed", "calibrate", "threshold"});
    check_keys(*d, "$.defaults", keys);
    for (const char* axis : {"theta", "n_h"}) {
      if (const json* v = find(*d, axis); v && v->is_array()) fail(std::string("$.defaults.") + axis, "sweep arrays belong in a scenario");
    }
    apply_fields(base, *d, "$.defaults");
    if (const json* s = find(*d, "seed")) {
      if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<std::int64_t>() >= 0)) {
        fail("$.defaults.seed", "expected a non-negative integer");
      }
      plan.seed = s->get<std::uint64_t>();
    }
    if (const json* c = find(*d, "calibrate")) plan.calibrate = as_bool(*c, "$.defaults.calibrate");
    if (const json* t = find(*d, "threshold")) plan.threshold = as_number(*t, "$.defaults.threshold");
    if (const json* m = find(*d, "methods")) default_methods = *m;
    if (const json* e = find(*d, "effect")) {
      if (find(*d, "theta_t")) fail("$.defaults.effect", "give either theta_t or effect, not both");
      default_effect = as_number(*e, "$.defaults.effect");
    }
  }
  const json* scenarios = find(doc, "scenarios");
  if (!scenarios) fail("$.scenarios", "missing required key");
  if (!scenarios->is_array() || scenarios->empty()) fail("$.scenarios", "expected a non-empty array");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < scenarios->size(); ++i) {
    const std::string p = "$.scenarios[" + std::to_string(i) + "]";
    const json& sc = (*scenarios)[i];
    check_keys(sc, p, kScenarioKeys);
    const std::string id = find(sc, "id") ? as_string(sc["id"], p + ".id") : std::to_string(i + 1);
    if (!ids.insert(id).second) fail(p + ".id", "duplicate scenario id '" + id + "'");

    std::vector<MethodSpec> methods;
    if (const json* m = find(sc, "methods")) {
      methods = parse_methods(*m, p + ".methods");
    } else if (!default_methods.is_null()) {
      methods = parse_methods(default_methods, "$.defaults.methods");
    } else {
      fail(p + ".methods", "missing (and no defaults.methods)");
    }

    const json* effect = find(sc, "effect");
    if (effect && find(sc, "theta_t")) fail(p + ".effect", "give either theta_t or effect, not both");
    bool has_shift = default_effect.has_value() && !find(sc, "theta_t");
    double shift = default_effect.value_or(0.0);
    if (effect) {
      has_shift = true;
      shift = as_number(*effect, p + ".effect");
    }
    for (const json& theta_v : axis_values(sc, "theta", p)) {
      for (const json& nh_v : axis_values(sc, "n_h", p)) {
        json flat = sc;
        flat.erase("methods");
        flat.erase("id");
        flat.erase("effect");
        if (!theta_v.is_null()) flat["theta"] = theta_v;
        if (!nh_v.is_null()) flat["n_h"] = nh_v;
        ScenarioConfig cfg = base;
        apply_fields(cfg, flat, p);
        if (has_shift) cfg.theta_t = cfg.theta + shift;
        const std::string cell_id =
            id + axis_suffix("theta", find(sc, "theta") && sc["theta"].is_array() ? theta_v : json()) +
            axis_suffix("n_h", find(sc, "n_h") && sc["n_h"].is_array() ? nh_v : json());
        for (const auto& m : methods) {
          ScenarioConfig c = cfg;
          c.policy = m.policy;
          c.gated = m.gated;
          try {
            validate(c);
          } catch (const ConfigError& e) {
            fail(p, e.what());
          } catch (const DomainError& e) {
            fail(p, e.what());
          }
          plan.cells.push_back({cell_id, m.name, c});
        }
      }
    }
  }
  return plan;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string rows_to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "scenario_id,method,gated,theta,theta_t,theta_h,n,n_t,n_h,power,bias,mse,rel_bias,rel_mse,"
        "mc_stderr,C,achieved_alpha,rel_bias_se,rel_mse_se,mean_weight,gated_out_rate,reps\n";
  for (const auto& r : rows) {
    const auto& s = r.result;
    os << r.scenario_id << ',' << r.method << ',' << (r.gated ? "true" : "false") << ',' << format_double(r.theta)
       << ',' << format_double(r.theta_t) << ',' << format_double(r.theta_h) << ',' << r.n << ',' << r.n_t << ','
       << r.n_h << ',' << format_double(s.rejection_rate) << ',' << format_double(s.bias) << ','
       << format_double(s.mse) << ',' << format_double(s.rel_bias) << ',' << format_double(s.rel_mse) << ','
       << format_double(s.mc_stderr) << ',' << format_double(r.threshold_c) << ','
       << format_double(r.achieved_alpha) << ',' << format_double(s.rel_bias_se) << ','
       << format_double(s.rel_mse_se) << ',' << format_double(s.mean_weight) << ','
       << format_double(s.gated_out_rate) << ',' << s.reps << '\n';
  }
  return os.str();
}

json rows_to_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    const auto& s = r.result;
    arr.push_back({{"scenario_id", r.scenario_id},
                   {"method", r.method},
                   {"gated", r.gated},
                   {"theta", r.theta},
                   {"theta_t", r.theta_t},
                   {"theta_h", r.theta_h},
                   {"n", r.n},
                   {"n_t", r.n_t},
                   {"n_h", r.n_h},
                   {"power", s.rejection_rate},
                   {"mean_estimate", s.mean_estimate},
                   {"bias", s.bias},
                   {"mse", s.mse},
                   {"rel_bias", s.rel_bias},
                   {"rel_mse", s.rel_mse},
                   {"mc_stderr", s.mc_stderr},
                   {"C", r.threshold_c},
                   {"achieved_alpha", r.achieved_alpha},
                   {"rel_bias_se", s.rel_bias_se},
                   {"rel_mse_se", s.rel_mse_se},
                   {"mean_weight", s.mean_weight},
                   {"gated_out_rate", s.gated_out_rate},
                   {"reps", s.reps}});
  }
  return arr;
}

std::vector<SweepRow> rows_from_json(const json& doc) {
  std::vector<SweepRow> rows;
  for (const auto& j : doc) {
    SweepRow r;
    r.scenario_id = j.at("scenario_id").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.gated = j.at("gated").get<bool>();
    r.theta = j.at("theta").get<double>();
    r.theta_t = j.at("theta_t").get<double>();
    r.theta_h = j.at("theta_h").get<double>();
    r.n = j.at("n").get<std::int64_t>();
    r.n_t = j.at("n_t").get<std::int64_t>();
    r.n_h = j.at("n_h").get<std::int64_t>();
    r.threshold_c = j.at("C").get<double>();
    r.achieved_alpha = j.at("achieved_alpha").get<double>();
    auto& s = r.result;
    s.rejection_rate = j.at("power").get<double>();
    s.mean_estimate = j.at("mean_estimate").get<double>();
    s.bias = j.at("bias").get<double>();
    s.mse = j.at("mse").get<double>();
    s.rel_bias = j.at("rel_bias").get<double>();
    s.rel_mse = j.at("rel_mse").get<double>();
    s.mc_stderr = j.at("mc_stderr").get<double>();
    s.rel_bias_se = j.at("rel_bias_se").get<double>();
    s.rel_mse_se = j.at("rel_mse_se").get<double>();
    s.mean_weight = j.at("mean_weight").get<double>();
    s.gated_out_rate = j.at("gated_out_rate").get<double>();
    s.reps = j.at("reps").get<std::int64_t>();
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string rows_to_table(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "scenario" << std::setw(16) << "method" << std::right << std::setw(8)
     << "theta" << std::setw(8) << "theta_t" << std::setw(8) << "n_h" << std::setw(9) << "power" << std::setw(10)
     << "rel_bias" << std::setw(10) << "rel_mse" << std::setw(9) << "C" << '\n';
  os << std::fixed;
  for (const auto& r : rows) {
    os << std::left << std::setw(16) << r.scenario_id << std::setw(16) << r.method << std::right
       << std::setprecision(3) << std::setw(8) << r.theta << std::setw(8) << r.theta_t << std::setw(8) << r.n_h
       << std::setprecision(4) << std::setw(9) << r.result.rejection_rate << std::setw(10) << r.result.rel_bias
       << std::setw(10) << r.result.rel_mse << std::setw(9) << r.threshold_c << '\n';
  }
  return os.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace wow
