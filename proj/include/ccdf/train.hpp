#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccdf/causal.hpp"
#include "ccdf/checkpoint.hpp"
#include "ccdf/dataset.hpp"
#include "ccdf/model.hpp"
#include "ccdf/report.hpp"

namespace ccdf {

// ccdf: three branches, four-term loss, TIE at test time.
// masking: sentence branch only, biased tokens replaced by UNK in training X.
// lmixin: sentence + bias branches (no ensemble); sentence branch alone at test.
// vanilla: sentence branch only.
enum class Mode { ccdf, masking, lmixin, vanilla };
enum class Inference { tie, te, factual };

std::string_view to_string(Mode m);
std::string_view to_string(Inference i);
Mode parse_mode(std::string_view text);
Inference parse_inference(std::string_view text);

struct TrainConfig {
  std::size_t epochs = 3;
  std::size_t batch_size = 8;
  double learning_rate = 1e-5;
  double dropout = 0.1;
  std::size_t hidden = 256;
  std::size_t max_len_x = kDefaultMaxLenX;
  std::size_t max_len_b = kDefaultMaxLenB;
  std::size_t eval_every_steps = 1000;
  std::uint64_t seed = 0;
  Mode mode = Mode::ccdf;

  std::size_t embed_dim = 64;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double embed_init_scale = 0.01;
  double head_bias_init = 0.5;
  double head_out_scale = 0.1;
  // Decay of the running average that tracks the invariant responses c_e, c_x.
  double invariant_momentum = 0.99;
};

// A model together with everything needed to feed it.
struct TrainedModel {
  Model model;
  Vocab vocab;
  Mode mode = Mode::ccdf;
  std::size_t max_len_x = kDefaultMaxLenX;
  std::size_t max_len_b = kDefaultMaxLenB;
};

// Checkpoint arrays: model parameters plus meta.mode, meta.max_len_x,
// meta.max_len_b.
std::vector<NamedArray> to_checkpoint(const TrainedModel& trained);
TrainedModel from_checkpoint(const std::vector<NamedArray>& arrays, Vocab vocab);

struct LossTerms {
  ad::Value total;
  ad::Value fused;
  ad::Value ensemble;
  ad::Value sentence;
  ad::Value bias;
};

// Batch mean of CE(Y_exb) + CE(Y_e) + CE(Y_x) + CE(Y_b). The bias term reads
// y_b_isolated, so its gradient stops at F_B.
LossTerms total_loss(std::span<const BranchValues> batch, std::span<const int> labels);

struct LossRecord {
  std::size_t step = 0;
  std::optional<double> fused, ensemble, sentence, bias;
  std::optional<double> val_f1;  // only on evaluation steps
};

struct TrainResult {
  TrainedModel best;
  std::string best_checkpoint;  // serialized bytes of `best`
  std::optional<double> best_val_f1;
  std::size_t best_step = 0;
  std::size_t steps = 0;
  std::vector<LossRecord> log;
  // Best validation F1 seen so far, one entry per evaluation.
  std::vector<std::optional<double>> best_history;
};

TrainResult train(const TrainConfig& config, std::span<const Example> train_set,
                  std::span<const Example> valid_set, const Lexicon& lexicon);

// What the model trains on: masking mode swaps lexicon tokens in X for UNK.
EncodedBatch encode_training_view(Mode mode, std::span<const Example> examples,
                                  const Lexicon& lexicon, const Vocab& vocab,
                                  std::size_t max_len_x, std::size_t max_len_b);
// Validation, test and inference input; the same for every mode.
EncodedBatch encode_eval_view(const TrainedModel& trained, std::span<const Example> examples,
                              const Lexicon& lexicon);

// The inference rule used for model selection in each mode.
Inference selection_inference(Mode mode);

int predict_label(Mode mode, Inference inference, const ScenarioSet& scenarios);
std::vector<int> predict(const TrainedModel& trained, std::span<const Example> examples,
                         const Lexicon& lexicon, Inference inference);

EvalReport evaluate(const TrainedModel& trained, std::span<const Example> test_set,
                    const Lexicon& lexicon, Inference inference);

struct InferenceRecord {
  std::string text;
  BiasedTokenSet biased;
  ScenarioSet scenarios;
  EffectBundle effects;
  int factual_label = 0;
  int te_label = 0;
  int tie_label = 0;
};

InferenceRecord infer(const TrainedModel& trained, const Example& example, const Lexicon& lexicon);
nlohmann::json to_json(const InferenceRecord& record);

std::string loss_log_csv(std::span<const LossRecord> log);

}  // namespace ccdf
