#include "wow/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "wow/errors.hpp"

namespace wow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// w = R / (1 + R) from log R.
WeightDecision sam_from_log_likelihoods(double l0, double l_minus, double l_plus) {
  const double l_alt = std::max(l_minus, l_plus);
  if (l_alt == -std::numeric_limits<double>::infinity() && l0 == l_alt) {
    throw ConfigError("sam: likelihood vanishes at the historical estimate and both alternatives");
  }
  const double log_r = l0 - l_alt;
  WeightDecision d;
  d.w_h = std::clamp(logistic(log_r), 0.0, 1.0);
  d.diagnostics["log_R"] = log_r;
  d.diagnostics["R"] = std::exp(log_r);
  return d;
}

double pick_tail(double lower, double upper, PppTail tail) {
  switch (tail) {
    case PppTail::lower:
      return std::clamp(lower, 0.0, 1.0);
    case PppTail::upper:
      return std::clamp(upper, 0.0, 1.0);
    case PppTail::two_sided:
      return std::clamp(2.0 * std::min(lower, upper), 0.0, 1.0);
  }
  return 1.0;
}

template <class Inputs>
WeightDecision ebrmap_impl(const EbRmapWeight& policy, const Inputs& in) {
  validate(WeightPolicy{policy});
  const double ppp = prior_predictive_pvalue(in, policy.tail);
  WeightDecision d;
  d.w_h = ebrmap_weight_from_ppp(policy, ppp);
  d.diagnostics["ppp"] = ppp;
  return d;
}

template <class Inputs>
WeightDecision dispatch(const WeightPolicy& policy, const Inputs& in) {
  return std::visit(overloaded{[](const FixedWeight& p) { return fixed_weight(p); },
                               [&](const SamWeight& p) { return sam_weight(p, in); },
                               [&](const EbRmapWeight& p) { return ebrmap_weight(p, in); }},
                    policy);
}

template <class Inputs>
WeightDecision gated_impl(const WeightPolicy& policy, const GateDecision& gate, const Inputs& in) {
  if (!gate.borrow) {
    validate(policy);
    WeightDecision d;
    d.w_h = 0.0;
    d.gated_out = true;
    d.diagnostics["k"] = gate.k;
    return d;
  }
  WeightDecision d = dispatch(policy, in);
  d.diagnostics["k"] = gate.k;
  return d;
}

}  // namespace

void validate(const WeightPolicy& policy) {
  std::visit(overloaded{[](const FixedWeight& p) {
                          if (!(p.w >= 0.0 && p.w <= 1.0)) throw ConfigError("fixed weight must lie in [0, 1]");
                        },
                        [](const SamWeight& p) {
                          if (!(p.delta > 0.0) || !std::isfinite(p.delta)) {
                            throw ConfigError("sam delta must be positive");
                          }
                        },
                        [](const EbRmapWeight& p) {
                          if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw ConfigError("ebrmap gamma must lie in (0, 1)");
                          if (!(p.grid_step > 0.0 && p.grid_step <= 1.0)) {
                            throw ConfigError("ebrmap grid_step must lie in (0, 1]");
                          }
                        }},
             policy);
}

WeightDecision fixed_weight(const FixedWeight& policy) {
  validate(WeightPolicy{policy});
  WeightDecision d;
  d.w_h = policy.w;
  return d;
}

WeightDecision sam_weight(const SamWeight& policy, const BinaryInputs& in) {
  validate(WeightPolicy{policy});
  validate(in.data);
  validate(in.hist);
  const double theta_h = static_cast<double>(in.hist.x_h) / static_cast<double>(in.hist.n_h);
  const double ninf = -std::numeric_limits<double>::infinity();
  const double lo = theta_h - policy.delta;
  const double hi = theta_h + policy.delta;
  if (lo < 0.0 && hi > 1.0) {
    throw ConfigError("sam: both theta_h - delta and theta_h + delta fall outside [0, 1]");
  }
  const double l0 = binomial_log_pmf(in.data.x, in.data.n, theta_h);
  const double l_minus = lo >= 0.0 ? binomial_log_pmf(in.data.x, in.data.n, lo) : ninf;
  const double l_plus = hi <= 1.0 ? binomial_log_pmf(in.data.x, in.data.n, hi) : ninf;
  return sam_from_log_likelihoods(l0, l_minus, l_plus);
}

WeightDecision sam_weight(const SamWeight& policy, const ContinuousInputs& in) {
  validate(WeightPolicy{policy});
  validate(in.hist);
  validate(in.data);
  const double se2 = in.data.sigma * in.data.sigma / static_cast<double>(in.data.n);
  const double ybar = in.data.mean();
  const double th = in.hist.ybar_h;
  return sam_from_log_likelihoods(normal_log_pdf(ybar, th, se2),
                                  normal_log_pdf(ybar, th - policy.delta, se2),
                                  normal_log_pdf(ybar, th + policy.delta, se2));
}

double prior_predictive_pvalue(const BinaryInputs& in, PppTail tail) {
  validate(in.prior);
  validate(in.data);
  validate(in.hist);
  const BetaShape informative{in.prior.a + static_cast<double>(in.hist.x_h),
                              in.prior.b + static_cast<double>(in.hist.n_h - in.hist.x_h)};
  const std::int64_t m = in.data.n;
  double lower = 0.0;
  double upper = 0.0;
  for (std::int64_t k = 0; k <= m; ++k) {
    const double p = std::exp(beta_binomial_log_pmf(k, m, informative));
    if (k <= in.data.x) lower += p;
    if (k >= in.data.x) upper += p;
  }
  return pick_tail(lower, upper, tail);
}

double prior_predictive_pvalue(const ContinuousInputs& in, PppTail tail) {
  validate(in.hist);
  validate(in.data);
  const double se2 = in.data.sigma * in.data.sigma / static_cast<double>(in.data.n);
  const double z = (in.data.mean() - in.hist.ybar_h) / std::sqrt(in.hist.informative_variance() + se2);
  return pick_tail(normal_cdf(z), normal_cdf(-z), tail);
}

double ebrmap_weight_from_ppp(const EbRmapWeight& policy, double ppp) {
  validate(WeightPolicy{policy});
  const double raw = std::min(1.0, std::max(0.0, ppp) / (1.0 - policy.gamma));
  return std::clamp(std::round(raw / policy.grid_step) * policy.grid_step, 0.0, 1.0);
}

WeightDecision ebrmap_weight(const EbRmapWeight& policy, const BinaryInputs& in) {
  return ebrmap_impl(policy, in);
}

WeightDecision ebrmap_weight(const EbRmapWeight& policy, const ContinuousInputs& in) {
  return ebrmap_impl(policy, in);
}

WeightDecision apply_policy(const WeightPolicy& policy, const BinaryInputs& in) {
  return dispatch(policy, in);
}

WeightDecision apply_policy(const WeightPolicy& policy, const ContinuousInputs& in) {
  return dispatch(policy, in);
}

WeightDecision gated(const WeightPolicy& policy, const GateDecision& gate, const BinaryInputs& in) {
  return gated_impl(policy, gate, in);
}

WeightDecision gated(const WeightPolicy& policy, const GateDecision& gate, const ContinuousInputs& in) {
  return gated_impl(policy, gate, in);
}

std::string policy_name(const WeightPolicy& policy) {
  return std::visit(overloaded{[](const FixedWeight& p) { return std::string(p.w == 0.0 ? "np" : "fixed"); },
                               [](const SamWeight&) { return std::string("sam"); },
                               [](const EbRmapWeight&) { return std::string("ebrmap"); }},
                    policy);
}

std::string tail_name(PppTail tail) {
  switch (tail) {
    case PppTail::lower:
      return "lower";
    case PppTail::upper:
      return "upper";
    case PppTail::two_sided:
      return "two_sided";
  }
  return "two_sided";
}

PppTail parse_tail(const std::string& name) {
  if (name == "lower") return PppTail::lower;
  if (name == "upper") return PppTail::upper;
  if (name == "two_sided" || name == "two-sided") return PppTail::two_sided;
  throw ConfigError("unknown PPP tail '" + name + "' (expected lower, upper or two_sided)");
}

}  // namespace wow
