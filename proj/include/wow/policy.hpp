#pragma once
//
// Borrowing-weight policies and the gated wrapper.
//
// The gate decides *whether* to borrow; a policy decides *how much*.  Any
// policy composes with the gate: outside the borrowing region the wrapper
// forces w_h = 0 (the no-borrowing posterior), inside it returns the wrapped
// policy's weight unchanged.
//

#include <map>
#include <string>
#include <variant>

#include "wow/model.hpp"
#include "wow/waic.hpp"

namespace wow {

// Fixed mixture weight (rMAP); w = 0 is the no-borrowing analysis.
struct FixedWeight {
  double w = 0.5;
};

// Self-adapting mixture: likelihood ratio of the historical estimate against
// the clinically shifted alternatives theta_h +- delta.
struct SamWeight {
  double delta = 0.15;
};

enum class PppTail { lower, upper, two_sided };

// Empirical-Bayes rMAP: weight from the prior predictive p-value of the
// concurrent summary under the informative component.
struct EbRmapWeight {
  double gamma = 0.8;
  PppTail tail = PppTail::two_sided;
  double grid_step = 0.01;
};

using WeightPolicy = std::variant<FixedWeight, SamWeight, EbRmapWeight>;

void validate(const WeightPolicy& policy);

struct WeightDecision {
  double w_h = 0.0;
  bool gated_out = false;
  std::map<std::string, double> diagnostics;
};

struct BinaryInputs {
  BetaShape prior;
  BinaryDataset data;
  HistoricalBinary hist;
};

struct ContinuousInputs {
  HistoricalContinuous hist;
  ContinuousStats data;
};

WeightDecision fixed_weight(const FixedWeight& policy);

WeightDecision sam_weight(const SamWeight& policy, const BinaryInputs& in);
WeightDecision sam_weight(const SamWeight& policy, const ContinuousInputs& in);

// Prior predictive p-value of the observed summary for the chosen tail.
double prior_predictive_pvalue(const BinaryInputs& in, PppTail tail);
double prior_predictive_pvalue(const ContinuousInputs& in, PppTail tail);

// w_h = min(1, PPP / (1 - gamma)), snapped to the nearest grid_step multiple.
double ebrmap_weight_from_ppp(const EbRmapWeight& policy, double ppp);

WeightDecision ebrmap_weight(const EbRmapWeight& policy, const BinaryInputs& in);
WeightDecision ebrmap_weight(const EbRmapWeight& policy, const ContinuousInputs& in);

// Ungated dispatch.
WeightDecision apply_policy(const WeightPolicy& policy, const BinaryInputs& in);
WeightDecision apply_policy(const WeightPolicy& policy, const ContinuousInputs& in);

// Gated dispatch; `gate` must have been computed on the same data.
WeightDecision gated(const WeightPolicy& policy, const GateDecision& gate, const BinaryInputs& in);
WeightDecision gated(const WeightPolicy& policy, const GateDecision& gate, const ContinuousInputs& in);

std::string policy_name(const WeightPolicy& policy);
std::string tail_name(PppTail tail);
PppTail parse_tail(const std::string& name);

}  // namespace wow
