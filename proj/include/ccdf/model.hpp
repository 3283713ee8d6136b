#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ccdf/autodiff.hpp"
#include "ccdf/checkpoint.hpp"

namespace ccdf {

// Two class scores: index 0 non-toxic, index 1 toxic.
using Scores = std::array<double, 2>;

inline constexpr double kFusionFloor = 1e-12;

// Harmonic fusion, per class: Z = tanh(a)tanh(b)tanh(c) floored at
// kFusionFloor, score = ln(Z / (1 + Z)).
Scores fuse(const Scores& y_e, const Scores& y_x, const Scores& y_b);
// Two-branch form used by the ablated graphs.
Scores fuse(const Scores& first, const Scores& second);

ad::Value fuse(const ad::Value& y_e, const ad::Value& y_x, const ad::Value& y_b);
ad::Value fuse(const ad::Value& first, const ad::Value& second);

enum class Scenario { factual, counterfactual };

struct ScenarioLogits {
  Scores y_e{};
  Scores y_x{};
  Scores y_b{};
  Scores fused{};
  Scenario scenario = Scenario::factual;
};

// Factual: every branch live. Counterfactual: F_E and F_X replaced by their
// invariant responses, so only y_b still depends on the input.
ScenarioLogits make_factual(const Scores& y_e, const Scores& y_x, const Scores& y_b);
ScenarioLogits make_counterfactual(const Scores& c_e, const Scores& c_x, const Scores& y_b);

enum class Branch { ensemble, sentence, bias };
std::string_view branch_key(Branch b);  // "e", "x", "b"

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 64;
  std::size_t hidden = 256;
  double dropout = 0.1;
  double embed_init_scale = 0.01;  // std-dev of the embedding table
  double head_bias_init = 0.5;    // initial output bias of every branch head
  double head_out_scale = 0.1;    // multiplier on the output layer's initial weights
};

// One example's padded inputs.
struct ModelInput {
  std::span<const std::int32_t> x_ids;
  std::span<const std::uint8_t> x_mask;
  std::span<const std::int32_t> b_ids;
  std::span<const std::uint8_t> b_mask;
};

struct ForwardOptions {
  bool training = false;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t example = 0;  // position within the step; keys dropout streams
};

// Encoded representations shared by every branch.
struct Features {
  ad::Value x_rows;
  ad::Value b_rows;
  ad::Value x_pooled;
  ad::Value b_pooled;
  ad::Value ensemble;
};

// Factual branch outputs as graph values. y_b feeds the fusion; y_b_isolated
// is F_B applied to a gradient-stopped copy of the B representation and is
// what the bias-only loss sees, so that loss never reaches the encoder.
struct BranchValues {
  ad::Value y_e;
  ad::Value y_x;
  ad::Value y_b;
  ad::Value y_b_isolated;
};

class Model {
 public:
  Model() = default;
  Model(const ModelConfig& config, std::uint64_t seed);

  // Rebuilds a model from checkpoint arrays; extra "meta.*" arrays are ignored.
  static Model from_arrays(const std::vector<NamedArray>& arrays, double dropout = 0.1);
  std::vector<NamedArray> to_arrays() const;

  const ModelConfig& config() const { return config_; }
  std::size_t vocab_size() const { return config_.vocab_size; }

  ad::Value& param(std::string_view name);
  const ad::Value& param(std::string_view name) const;
  const std::vector<std::string>& param_names() const { return names_; }

  std::vector<ad::Value> encoder_params() const;
  std::vector<ad::Value> branch_params(Branch b) const;
  void zero_grad();

  // Rows of pad positions come out as zeros.
  ad::Value encode(std::span<const std::int32_t> ids, std::span<const std::uint8_t> mask,
                   const ForwardOptions& opts = {}, std::uint64_t stream = 0) const;
  // Bias rows query the sentence rows: S = B X^T, softmax over sentence
  // positions, attended rows averaged over active bias positions.
  ad::Value cross_attention_ensemble(const ad::Value& x_rows, const ad::Value& b_rows,
                                     std::span<const std::uint8_t> x_mask,
                                     std::span<const std::uint8_t> b_mask) const;
  ad::Value head(Branch b, const ad::Value& input, const ForwardOptions& opts = {}) const;

  Features features(const ModelInput& input, const ForwardOptions& opts = {}) const;
  BranchValues branches(const Features& f, const ForwardOptions& opts = {}) const;

  ScenarioLogits branch_forward(const Features& f, Scenario scenario) const;

  Scores invariant_response(Branch b) const;  // c_e or c_x
  void set_invariant_response(Branch b, const Scores& value);

  // F_B on the bare NOBIAS input; the no-treatment value of B.
  Scores bias_reference() const;

 private:
  void add_param(std::string name, ad::Value value);

  ModelConfig config_;
  std::vector<std::string> names_;
  std::vector<ad::Value> params_;
};

Scores to_scores(const ad::Value& v);

}  // namespace ccdf
