#include "ccdf/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "ccdf/error.hpp"
#include "ccdf/optim.hpp"

namespace ccdf {
namespace {

ModelInput input_at(const EncodedBatch& b, std::size_t i) {
  return {b.x_row(i), b.x_mask_row(i), b.b_row(i), b.b_mask_row(i)};
}

std::vector<ad::Value> trainable_params(const Model& model, Mode mode) {
  auto params = model.encoder_params();
  auto append = [&](Branch b) {
    auto more = model.branch_params(b);
    params.insert(params.end(), more.begin(), more.end());
  };
  switch (mode) {
    case Mode::ccdf:
      append(Branch::ensemble);
      append(Branch::sentence);
      append(Branch::bias);
      break;
    case Mode::lmixin:
      append(Branch::sentence);
      append(Branch::bias);
      break;
    case Mode::masking:
    case Mode::vanilla:
      append(Branch::sentence);
      break;
  }
  return params;
}

ad::Value mean_of(std::vector<ad::Value>& terms) {
  ad::Value acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = ad::add(acc, terms[i]);
  return ad::scale(acc, 1.0 / static_cast<double>(terms.size()));
}

void check_label(int label) {
  if (label != 0 && label != 1) {
    throw ValidationError("label must be 0 or 1, got " + std::to_string(label));
  }
}

// Running average of a branch's factual response, bias-corrected for its
// zero start.
class InvariantTracker {
 public:
  explicit InvariantTracker(double momentum) : momentum_(momentum) {}

  Scores update(const Scores& batch_mean) {
    ++updates_;
    for (std::size_t c = 0; c < 2; ++c)
      raw_[c] = momentum_ * raw_[c] + (1.0 - momentum_) * batch_mean[c];
    const double correction = 1.0 - std::pow(momentum_, static_cast<double>(updates_));
    return {raw_[0] / correction, raw_[1] / correction};
  }

 private:
  double momentum_;
  Scores raw_{};
  std::size_t updates_ = 0;
};

std::optional<double> validation_f1(const TrainedModel& trained, const EncodedBatch& encoded,
                                    const std::vector<int>& labels) {
  const auto rule = selection_inference(trained.mode);
  const auto reference = trained.model.bias_reference();
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto scenarios = evaluate_scenarios(trained.model, input_at(encoded, i), reference);
    c.add(predict_label(trained.mode, rule, scenarios), labels[i]);
  }
  return f1_binary(c);
}

bool better(const std::optional<double>& candidate, const std::optional<double>& incumbent,
            bool have_incumbent) {
  if (!have_incumbent) return true;
  if (!candidate) return false;
  return !incumbent || *candidate > *incumbent;
}

}  // namespace

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::ccdf: return "ccdf";
    case Mode::masking: return "masking";
    case Mode::lmixin: return "lmixin";
    case Mode::vanilla: return "vanilla";
  }
  return "?";
}

std::string_view to_string(Inference i) {
  switch (i) {
    case Inference::tie: return "tie";
    case Inference::te: return "te";
    case Inference::factual: return "factual";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "ccdf") return Mode::ccdf;
  if (text == "masking") return Mode::masking;
  if (text == "lmixin") return Mode::lmixin;
  if (text == "vanilla") return Mode::vanilla;
  throw ValidationError("unknown mode '" + std::string(text) +
                        "' (expected one of {ccdf, masking, lmixin, vanilla})");
}

Inference parse_inference(std::string_view text) {
  if (text == "tie") return Inference::tie;
  if (text == "te") return Inference::te;
  if (text == "factual") return Inference::factual;
  throw ValidationError("unknown inference rule '" + std::string(text) +
                        "' (expected one of {tie, te, factual})");
}

std::vector<NamedArray> to_checkpoint(const TrainedModel& trained) {
  auto arrays = trained.model.to_arrays();
  arrays.push_back({"meta.mode", {1}, {static_cast<double>(trained.mode)}});
  arrays.push_back({"meta.max_len_x", {1}, {static_cast<double>(trained.max_len_x)}});
  arrays.push_back({"meta.max_len_b", {1}, {static_cast<double>(trained.max_len_b)}});
  return arrays;
}

TrainedModel from_checkpoint(const std::vector<NamedArray>& arrays, Vocab vocab) {
  TrainedModel t;
  t.model = Model::from_arrays(arrays);
  for (const auto& a : arrays) {
    if (a.data.size() != 1) continue;
    if (a.name == "meta.mode") {
      const auto code = static_cast<int>(a.data[0]);
      if (code < 0 || code > static_cast<int>(Mode::vanilla)) {
        throw ParseError("checkpoint has unknown mode code " + std::to_string(code));
      }
      t.mode = static_cast<Mode>(code);
    } else if (a.name == "meta.max_len_x") {
      t.max_len_x = static_cast<std::size_t>(a.data[0]);
    } else if (a.name == "meta.max_len_b") {
      t.max_len_b = static_cast<std::size_t>(a.data[0]);
    }
  }
  if (vocab.size() != t.model.vocab_size()) {
    throw ShapeError("vocabulary has " + std::to_string(vocab.size()) +
                     " entries but the checkpoint embedding has " +
                     std::to_string(t.model.vocab_size()) + " rows");
  }
  t.vocab = std::move(vocab);
  return t;
}

LossTerms total_loss(std::span<const BranchValues> batch, std::span<const int> labels) {
  if (batch.empty() || batch.size() != labels.size()) {
    throw ContractError("total_loss: need one label per example in a non-empty batch");
  }
  std::vector<ad::Value> fused, ens, sen, bias;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    check_label(labels[i]);
    const auto& o = batch[i];
    fused.push_back(ad::cross_entropy(fuse(o.y_e, o.y_x, o.y_b), labels[i]));
    ens.push_back(ad::cross_entropy(o.y_e, labels[i]));
    sen.push_back(ad::cross_entropy(o.y_x, labels[i]));
    bias.push_back(ad::cross_entropy(o.y_b_isolated, labels[i]));
  }
  LossTerms t;
  t.fused = mean_of(fused);
  t.ensemble = mean_of(ens);
  t.sentence = mean_of(sen);
  t.bias = mean_of(bias);
  t.total = ad::add(ad::add(t.fused, t.ensemble), ad::add(t.sentence, t.bias));
  return t;
}

Inference selection_inference(Mode mode) {
  return mode == Mode::ccdf ? Inference::tie : Inference::factual;
}

int predict_label(Mode mode, Inference inference, const ScenarioSet& s) {
  switch (mode) {
    case Mode::ccdf:
      switch (inference) {
        case Inference::tie: return debiased_prediction(s.factual, s.counterfactual).label;
        case Inference::te: return argmax(total_effect(s.factual, s.reference));
        case Inference::factual: return argmax(s.factual.fused);
      }
      break;
    case Mode::lmixin:
      if (inference == Inference::factual) return argmax(s.factual.y_x);
      {
        const auto fx = causal_effects(Variant::no_Fe, s.factual, s.counterfactual, s.reference);
        return argmax(inference == Inference::tie ? fx.tie : fx.te);
      }
    case Mode::masking:
    case Mode::vanilla:
      if (inference == Inference::factual) return argmax(s.factual.y_x);
      throw ValidationError("mode " + std::string(to_string(mode)) +
                            " has no counterfactual branch; use --inference factual");
  }
  throw ContractError("unhandled mode/inference combination");
}

TrainResult train(const TrainConfig& config, std::span<const Example> train_set,
                  std::span<const Example> valid_set, const Lexicon& lexicon) {
  if (train_set.empty()) throw ValidationError("training split is empty");
  if (valid_set.empty()) throw ValidationError("validation split is empty");
  if (config.batch_size == 0 || config.epochs == 0 || config.eval_every_steps == 0) {
    throw ValidationError("epochs, batch_size and eval_every_steps must be positive");
  }

  TrainedModel state;
  state.mode = config.mode;
  state.max_len_x = config.max_len_x;
  state.max_len_b = config.max_len_b;
  state.vocab = Vocab::build(train_set, &lexicon);

  ModelConfig mc;
  mc.vocab_size = state.vocab.size();
  mc.embed_dim = config.embed_dim;
  mc.hidden = config.hidden;
  mc.dropout = config.dropout;
  mc.embed_init_scale = config.embed_init_scale;
  mc.head_bias_init = config.head_bias_init;
  mc.head_out_scale = config.head_out_scale;
  state.model = Model(mc, config.seed);

  const auto encoded = encode_training_view(config.mode, train_set, lexicon, state.vocab,
                                            config.max_len_x, config.max_len_b);
  const auto valid_encoded = encode_eval_view(state, valid_set, lexicon);

  AdamWConfig oc;
  oc.learning_rate = config.learning_rate;
  oc.beta1 = config.beta1;
  oc.beta2 = config.beta2;
  oc.epsilon = config.epsilon;
  oc.weight_decay = config.weight_decay;
  AdamW optimizer(oc);
  auto params = trainable_params(state.model, config.mode);

  InvariantTracker track_e(config.invariant_momentum), track_x(config.invariant_momentum);
  const bool uses_ensemble = config.mode == Mode::ccdf;
  const bool uses_bias = config.mode == Mode::ccdf || config.mode == Mode::lmixin;

  TrainResult result;
  bool have_best = false;
  auto run_eval = [&](std::size_t step) {
    const auto f1 = validation_f1(state, valid_encoded, valid_encoded.labels);
    result.log.back().val_f1 = f1;
    if (better(f1, result.best_val_f1, have_best)) {
      have_best = true;
      result.best_val_f1 = f1;
      result.best_step = step;
      result.best = state;
      result.best.model = Model::from_arrays(state.model.to_arrays(), config.dropout);
      result.best_checkpoint = serialize_checkpoint(to_checkpoint(state));
    }
    result.best_history.push_back(result.best_val_f1);
  };

  std::vector<std::size_t> order(train_set.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                      static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 shuffle_rng(seq);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      ++step;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      state.model.zero_grad();

      std::vector<BranchValues> outputs;
      std::vector<int> labels;
      std::vector<ad::Value> lf, lx, lb;  // baseline modes
      Scores mean_e{}, mean_x{};
      const double inv_n = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const int label = encoded.labels[i];
        labels.push_back(label);
        ForwardOptions opts{true, config.seed, step, k - start};
        const auto f = state.model.features(input_at(encoded, i), opts);
        if (uses_ensemble) {
          outputs.push_back(state.model.branches(f, opts));
          for (std::size_t c = 0; c < 2; ++c) {
            mean_e[c] += outputs.back().y_e[c] * inv_n;
            mean_x[c] += outputs.back().y_x[c] * inv_n;
          }
          continue;
        }
        const auto y_x = state.model.head(Branch::sentence, f.x_pooled, opts);
        lx.push_back(ad::cross_entropy(y_x, label));
        for (std::size_t c = 0; c < 2; ++c) mean_x[c] += y_x[c] * inv_n;
        if (uses_bias) {
          const auto y_b = state.model.head(Branch::bias, f.b_pooled, opts);
          const auto y_b_isolated =
              state.model.head(Branch::bias, ad::stop_gradient(f.b_pooled), opts);
          lb.push_back(ad::cross_entropy(y_b_isolated, label));
          lf.push_back(ad::cross_entropy(fuse(y_x, y_b), label));
        }
      }

      LossRecord rec;
      rec.step = step;
      ad::Value total;
      if (uses_ensemble) {
        const auto terms = total_loss(outputs, labels);
        total = terms.total;
        rec.fused = terms.fused.item();
        rec.ensemble = terms.ensemble.item();
        rec.sentence = terms.sentence.item();
        rec.bias = terms.bias.item();
      } else {
        total = mean_of(lx);
        rec.sentence = total.item();
        if (uses_bias) {
          const auto fused = mean_of(lf), bias = mean_of(lb);
          rec.fused = fused.item();
          rec.bias = bias.item();
          total = ad::add(ad::add(fused, total), bias);
        }
      }
      if (!std::isfinite(total.item())) {
        throw NumericalError("non-finite training loss at step " + std::to_string(step));
      }
      ad::backward(total);
      optimizer.step(params);

      state.model.set_invariant_response(Branch::sentence, track_x.update(mean_x));
      if (uses_ensemble) state.model.set_invariant_response(Branch::ensemble, track_e.update(mean_e));

      result.log.push_back(rec);
      if (step % config.eval_every_steps == 0) run_eval(step);
    }
  }
  if (step % config.eval_every_steps != 0) run_eval(step);
  result.steps = step;
  return result;
}

EncodedBatch encode_training_view(Mode mode, std::span<const Example> examples,
                                  const Lexicon& lexicon, const Vocab& vocab,
                                  std::size_t max_len_x, std::size_t max_len_b) {
  EncodeOptions options;
  options.mask_biased_tokens = mode == Mode::masking;
  return encode_batch(examples, lexicon, vocab, max_len_x, max_len_b, options);
}

EncodedBatch encode_eval_view(const TrainedModel& trained, std::span<const Example> examples,
                              const Lexicon& lexicon) {
  return encode_batch(examples, lexicon, trained.vocab, trained.max_len_x, trained.max_len_b);
}

std::vector<int> predict(const TrainedModel& trained, std::span<const Example> examples,
                         const Lexicon& lexicon, Inference inference) {
  const auto encoded = encode_eval_view(trained, examples, lexicon);
  const auto reference = trained.model.bias_reference();
  std::vector<int> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto scenarios = evaluate_scenarios(trained.model, input_at(encoded, i), reference);
    out.push_back(predict_label(trained.mode, inference, scenarios));
  }
  return out;
}

EvalReport evaluate(const TrainedModel& trained, std::span<const Example> test_set,
                    const Lexicon& lexicon, Inference inference) {
  if (test_set.empty()) throw ValidationError("test set is empty");
  const auto predictions = predict(trained, test_set, lexicon, inference);
  std::vector<int> labels;
  std::vector<std::set<Category>> matched;
  for (const auto& ex : test_set) {
    labels.push_back(ex.label);
    matched.push_back(match_biased_tokens(ex.tokens, lexicon).categories);
  }
  auto report = build_report(predictions, labels, matched);
  report.mode = std::string(to_string(trained.mode));
  report.inference = std::string(to_string(inference));
  return report;
}

InferenceRecord infer(const TrainedModel& trained, const Example& example, const Lexicon& lexicon) {
  if (example.tokens.empty()) throw ValidationError("input text has no tokens");
  const std::span<const Example> one(&example, 1);
  const auto encoded = encode_eval_view(trained, one, lexicon);
  InferenceRecord r;
  r.text = example.text;
  r.biased = match_biased_tokens(example.tokens, lexicon);
  r.scenarios = evaluate_scenarios(trained.model, input_at(encoded, 0), trained.model.bias_reference());
  const auto variant = trained.mode == Mode::lmixin ? Variant::no_Fe : Variant::full;
  r.effects = causal_effects(variant, r.scenarios.factual, r.scenarios.counterfactual,
                             r.scenarios.reference);
  r.factual_label = predict_label(trained.mode, Inference::factual, r.scenarios);
  if (trained.mode == Mode::ccdf || trained.mode == Mode::lmixin) {
    r.te_label = argmax(r.effects.te);
    r.tie_label = argmax(r.effects.tie);
  } else {
    r.te_label = r.tie_label = r.factual_label;
  }
  return r;
}

nlohmann::json to_json(const InferenceRecord& r) {
  auto vec = [](const Scores& s) { return nlohmann::json::array({s[0], s[1]}); };
  nlohmann::json biased = nlohmann::json::array();
  for (std::size_t i = 0; i < r.biased.tokens.size(); ++i) {
    biased.push_back({{"token", r.biased.tokens[i]},
                      {"category", std::string(to_string(r.biased.token_categories[i]))}});
  }
  nlohmann::json categories = nlohmann::json::array();
  for (auto c : r.biased.categories) categories.push_back(std::string(to_string(c)));
  return {{"text", r.text},
          {"biased_tokens", biased},
          {"categories", categories},
          {"variant", std::string(to_string(r.effects.variant))},
          {"factual_fused", vec(r.scenarios.factual.fused)},
          {"counterfactual_fused", vec(r.scenarios.counterfactual.fused)},
          {"reference_fused", vec(r.scenarios.reference.fused)},
          {"te", vec(r.effects.te)},
          {"nde", vec(r.effects.nde)},
          {"tie", vec(r.effects.tie)},
          {"factual_label", r.factual_label},
          {"te_label", r.te_label},
          {"tie_label", r.tie_label}};
}

std::string loss_log_csv(std::span<const LossRecord> log) {
  std::ostringstream out;
  out.precision(17);
  out << "step,L_f,L_e,L_x,L_b,val_F1\n";
  auto field = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  for (const auto& r : log) {
    out << r.step << ',';
    field(r.fused);
    out << ',';
    field(r.ensemble);
    out << ',';
    field(r.sentence);
    out << ',';
    field(r.bias);
    out << ',';
    field(r.val_f1);
    out << '\n';
  }
  return out.str();
}

}  // namespace ccdf
