#pragma once

#include <string_view>

#include "ccdf/model.hpp"

namespace ccdf {

// Causal graph variants: the full three-branch graph and the two ablations
// that drop the ensemble branch (no_Fe) or the sentence branch (no_Fx).
enum class Variant { full, no_Fe, no_Fx };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct EffectBundle {
  Scores te{};
  Scores nde{};
  Scores tie{};
  Variant variant = Variant::full;
};

// argmax over the two classes; ties go to class 0 (non-toxic).
int argmax(const Scores& s);

// TE = Y(e, x, b) - Y(e*, x*, b*). `reference` is the counterfactual
// evaluation at the no-treatment bias input.
Scores total_effect(const ScenarioLogits& factual, const ScenarioLogits& reference);

// NDE = Y(e*, x*, b) - Y(e*, x*, b*).
Scores natural_direct_effect(const ScenarioLogits& counterfactual,
                             const ScenarioLogits& reference);

struct DebiasedPrediction {
  Scores tie{};
  int label = 0;
};

// TIE = Y(e, x, b) - Y(e*, x*, b).
DebiasedPrediction debiased_prediction(const ScenarioLogits& factual,
                                       const ScenarioLogits& counterfactual);

// TE, NDE and TIE (= TE - NDE) under `variant`. For the ablated variants the
// fused scores are recomputed with the two-branch fusion over the surviving
// branches of each scenario.
EffectBundle causal_effects(Variant variant, const ScenarioLogits& factual,
                            const ScenarioLogits& counterfactual,
                            const ScenarioLogits& reference);

// All three scenario evaluations for one example.
struct ScenarioSet {
  ScenarioLogits factual;
  ScenarioLogits counterfactual;
  ScenarioLogits reference;
};

// `bias_reference` is Model::bias_reference(), hoisted out so callers can
// evaluate it once per parameter set.
ScenarioSet evaluate_scenarios(const Model& model, const ModelInput& input,
                               const Scores& bias_reference);

}  // namespace ccdf
