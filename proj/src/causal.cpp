#include "ccdf/causal.hpp"

#include <string>

#include "ccdf/error.hpp"

namespace ccdf {
namespace {

Scores minus(const Scores& a, const Scores& b) { return {a[0] - b[0], a[1] - b[1]}; }

void require(const ScenarioLogits& logits, Scenario expected, const char* what) {
  if (logits.scenario != expected) {
    throw ContractError(std::string(what) + " must be a " +
                        (expected == Scenario::factual ? "factual" : "counterfactual") +
                        " evaluation");
  }
}

Scores variant_fused(Variant v, const ScenarioLogits& s) {
  switch (v) {
    case Variant::full: return s.fused;
    case Variant::no_Fe: return fuse(s.y_x, s.y_b);
    case Variant::no_Fx: return fuse(s.y_e, s.y_b);
  }
  throw ContractError("unknown causal variant");
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_Fe: return "no_Fe";
    case Variant::no_Fx: return "no_Fx";
  }
  return "?";
}

Variant parse_variant(std::string_view text) {
  if (text == "full") return Variant::full;
  if (text == "no_Fe") return Variant::no_Fe;
  if (text == "no_Fx") return Variant::no_Fx;
  throw ValidationError("unknown causal variant '" + std::string(text) +
                        "' (expected full, no_Fe or no_Fx)");
}

int argmax(const Scores& s) { return s[1] > s[0] ? 1 : 0; }

Scores total_effect(const ScenarioLogits& factual, const ScenarioLogits& reference) {
  require(factual, Scenario::factual, "total_effect: first argument");
  require(reference, Scenario::counterfactual, "total_effect: reference");
  return minus(factual.fused, reference.fused);
}

Scores natural_direct_effect(const ScenarioLogits& counterfactual,
                             const ScenarioLogits& reference) {
  require(counterfactual, Scenario::counterfactual, "natural_direct_effect: first argument");
  require(reference, Scenario::counterfactual, "natural_direct_effect: reference");
  return minus(counterfactual.fused, reference.fused);
}

DebiasedPrediction debiased_prediction(const ScenarioLogits& factual,
                                       const ScenarioLogits& counterfactual) {
  require(factual, Scenario::factual, "debiased_prediction: first argument");
  require(counterfactual, Scenario::counterfactual, "debiased_prediction: second argument");
  DebiasedPrediction out;
  out.tie = minus(factual.fused, counterfactual.fused);
  out.label = argmax(out.tie);
  return out;
}

EffectBundle causal_effects(Variant variant, const ScenarioLogits& factual,
                            const ScenarioLogits& counterfactual,
                            const ScenarioLogits& reference) {
  require(factual, Scenario::factual, "causal_effects: factual");
  require(counterfactual, Scenario::counterfactual, "causal_effects: counterfactual");
  require(reference, Scenario::counterfactual, "causal_effects: reference");
  const auto f = variant_fused(variant, factual);
  const auto c = variant_fused(variant, counterfactual);
  const auto r = variant_fused(variant, reference);
  EffectBundle out;
  out.variant = variant;
  out.te = minus(f, r);
  out.nde = minus(c, r);
  out.tie = minus(out.te, out.nde);
  return out;
}

ScenarioSet evaluate_scenarios(const Model& model, const ModelInput& input,
                               const Scores& bias_reference) {
  const auto features = model.features(input);
  ScenarioSet out;
  out.factual = model.branch_forward(features, Scenario::factual);
  out.counterfactual = make_counterfactual(model.invariant_response(Branch::ensemble),
                                           model.invariant_response(Branch::sentence),
                                           out.factual.y_b);
  out.reference = make_counterfactual(model.invariant_response(Branch::ensemble),
                                      model.invariant_response(Branch::sentence), bias_reference);
  return out;
}

}  // namespace ccdf
