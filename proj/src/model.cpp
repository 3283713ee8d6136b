#include "ccdf/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ccdf/error.hpp"

namespace ccdf {
namespace {

double fused_score(double z) {
  z = std::max(z, kFusionFloor);
  return std::log(z / (1.0 + z));
}

ad::Value fused_value(const ad::Value& z) {
  const auto floored = ad::clamp_min(z, kFusionFloor);
  return ad::sub(ad::log(floored), ad::log(ad::add_scalar(floored, 1.0)));
}

std::string head_name(Branch b, std::string_view part) {
  return "branch." + std::string(branch_key(b)) + "." + std::string(part);
}

std::string constant_name(Branch b) {
  if (b == Branch::bias) throw ContractError("F_B has no invariant response");
  return b == Branch::ensemble ? "const.c_e" : "const.c_x";
}

// One past the last active position.
std::size_t active_extent(std::span<const std::uint8_t> mask) {
  for (std::size_t i = mask.size(); i > 0; --i)
    if (mask[i - 1]) return i;
  return 0;
}

std::vector<double> uniform(std::mt19937_64& rng, std::size_t n, double limit) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> out(n);
  for (auto& v : out) v = dist(rng);
  return out;
}

constexpr Branch kBranches[] = {Branch::ensemble, Branch::sentence, Branch::bias};
constexpr std::int32_t kNoBiasId = 3;

}  // namespace

Scores fuse(const Scores& y_e, const Scores& y_x, const Scores& y_b) {
  Scores out{};
  for (std::size_t c = 0; c < 2; ++c)
    out[c] = fused_score(std::tanh(y_e[c]) * std::tanh(y_x[c]) * std::tanh(y_b[c]));
  return out;
}

Scores fuse(const Scores& first, const Scores& second) {
  Scores out{};
  for (std::size_t c = 0; c < 2; ++c)
    out[c] = fused_score(std::tanh(first[c]) * std::tanh(second[c]));
  return out;
}

ad::Value fuse(const ad::Value& y_e, const ad::Value& y_x, const ad::Value& y_b) {
  return fused_value(ad::mul(ad::mul(ad::tanh(y_e), ad::tanh(y_x)), ad::tanh(y_b)));
}

ad::Value fuse(const ad::Value& first, const ad::Value& second) {
  return fused_value(ad::mul(ad::tanh(first), ad::tanh(second)));
}

ScenarioLogits make_factual(const Scores& y_e, const Scores& y_x, const Scores& y_b) {
  return {y_e, y_x, y_b, fuse(y_e, y_x, y_b), Scenario::factual};
}

ScenarioLogits make_counterfactual(const Scores& c_e, const Scores& c_x, const Scores& y_b) {
  return {c_e, c_x, y_b, fuse(c_e, c_x, y_b), Scenario::counterfactual};
}

std::string_view branch_key(Branch b) {
  switch (b) {
    case Branch::ensemble: return "e";
    case Branch::sentence: return "x";
    case Branch::bias: return "b";
  }
  return "?";
}

Scores to_scores(const ad::Value& v) {
  if (v.size() != 2) {
    throw ShapeError("expected a 2-vector of class scores, got " + ad::to_string(v.shape()));
  }
  return {v[0], v[1]};
}

// ---------------------------------------------------------------------------

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  if (config.vocab_size <= 4 || config.embed_dim == 0 || config.hidden == 0) {
    throw ValidationError("model needs vocab_size > 4 and non-zero dimensions");
  }
  std::mt19937_64 rng(seed);
  const std::size_t v = config.vocab_size, d = config.embed_dim, h = config.hidden;

  std::normal_distribution<double> normal(0.0, config.embed_init_scale);
  std::vector<double> table(v * d);
  for (auto& x : table) x = normal(rng);
  std::fill(table.begin(), table.begin() + static_cast<std::ptrdiff_t>(d), 0.0);  // PAD row
  add_param("encoder.embed", ad::Value::parameter({v, d}, std::move(table)));
  add_param("encoder.mix.w", ad::Value::parameter({d, d}, uniform(rng, d * d, std::sqrt(3.0 / d))));
  add_param("encoder.mix.b", ad::Value::zeros({d}, true));

  for (Branch b : kBranches) {
    add_param(head_name(b, "w1"),
              ad::Value::parameter({d, h}, uniform(rng, d * h, std::sqrt(6.0 / (d + h)))));
    add_param(head_name(b, "b1"), ad::Value::zeros({h}, true));
    add_param(head_name(b, "w2"),
              ad::Value::parameter({h, 2}, uniform(rng, h * 2, config.head_out_scale * std::sqrt(6.0 / (h + 2)))));
    add_param(head_name(b, "b2"),
              ad::Value::parameter({2}, {config.head_bias_init, config.head_bias_init}));
  }
  add_param("const.c_e", ad::Value::zeros({2}, true));
  add_param("const.c_x", ad::Value::zeros({2}, true));
}

void Model::add_param(std::string name, ad::Value value) {
  names_.push_back(std::move(name));
  params_.push_back(std::move(value));
}

Model Model::from_arrays(const std::vector<NamedArray>& arrays, double dropout) {
  Model m;
  for (const auto& a : arrays) {
    if (a.name.starts_with("meta.")) continue;
    m.add_param(a.name, ad::Value::parameter(a.shape, a.data));
  }
  const auto& embed = m.param("encoder.embed");
  const auto& w1 = m.param(head_name(Branch::sentence, "w1"));
  if (embed.rank() != 2 || w1.rank() != 2) throw ShapeError("checkpoint has malformed weights");
  m.config_.vocab_size = embed.shape()[0];
  m.config_.embed_dim = embed.shape()[1];
  m.config_.hidden = w1.shape()[1];
  m.config_.dropout = dropout;

  const std::size_t d = m.config_.embed_dim, h = m.config_.hidden;
  auto expect = [&](std::string_view name, const ad::Shape& shape) {
    if (m.param(name).shape() != shape) {
      throw ShapeError("checkpoint array '" + std::string(name) + "' has shape " +
                       ad::to_string(m.param(name).shape()) + ", expected " +
                       ad::to_string(shape));
    }
  };
  expect("encoder.mix.w", {d, d});
  expect("encoder.mix.b", {d});
  for (Branch b : kBranches) {
    expect(head_name(b, "w1"), {d, h});
    expect(head_name(b, "b1"), {h});
    expect(head_name(b, "w2"), {h, 2});
    expect(head_name(b, "b2"), {2});
  }
  expect("const.c_e", {2});
  expect("const.c_x", {2});
  return m;
}

std::vector<NamedArray> Model::to_arrays() const {
  std::vector<NamedArray> out;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto data = params_[i].data();
    out.push_back({names_[i], params_[i].shape(), {data.begin(), data.end()}});
  }
  return out;
}

ad::Value& Model::param(std::string_view name) {
  return const_cast<ad::Value&>(std::as_const(*this).param(name));
}

const ad::Value& Model::param(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return params_[i];
  throw ValidationError("model has no parameter named '" + std::string(name) + "'");
}

std::vector<ad::Value> Model::encoder_params() const {
  return {param("encoder.embed"), param("encoder.mix.w"), param("encoder.mix.b")};
}

std::vector<ad::Value> Model::branch_params(Branch b) const {
  return {param(head_name(b, "w1")), param(head_name(b, "b1")), param(head_name(b, "w2")),
          param(head_name(b, "b2"))};
}

void Model::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

ad::Value Model::encode(std::span<const std::int32_t> ids, std::span<const std::uint8_t> mask,
                        const ForwardOptions& opts, std::uint64_t stream) const {
  if (ids.size() != mask.size()) {
    throw ShapeError("encode: " + std::to_string(ids.size()) + " ids but " +
                     std::to_string(mask.size()) + " mask entries");
  }
  auto rows = ad::embed(ids, param("encoder.embed"));
  rows = ad::tanh(ad::affine(rows, param("encoder.mix.w"), param("encoder.mix.b")));
  rows = ad::dropout(rows, config_.dropout, opts.training,
                     {opts.seed, opts.step, opts.example * 8 + stream});
  return ad::mask_rows(rows, mask);
}

ad::Value Model::cross_attention_ensemble(const ad::Value& x_rows, const ad::Value& b_rows,
                                          std::span<const std::uint8_t> x_mask,
                                          std::span<const std::uint8_t> b_mask) const {
  const auto scores = ad::matmul(b_rows, ad::transpose(x_rows));  // [m x n]
  const auto attention = ad::softmax(scores, 1, x_mask);
  const auto attended = ad::matmul(attention, x_rows);  // [m x d]
  return ad::mean_pool(attended, b_mask, 0);
}

ad::Value Model::head(Branch b, const ad::Value& input, const ForwardOptions& opts) const {
  auto hidden = ad::tanh(ad::affine(input, param(head_name(b, "w1")), param(head_name(b, "b1"))));
  hidden = ad::dropout(hidden, config_.dropout, opts.training,
                       {opts.seed, opts.step, opts.example * 8 + 2 + static_cast<std::uint64_t>(b)});
  return ad::affine(hidden, param(head_name(b, "w2")), param(head_name(b, "b2")));
}

Features Model::features(const ModelInput& input, const ForwardOptions& opts) const {
  // Positions past the last active one contribute nothing anywhere downstream,
  // so they are dropped before encoding.
  const auto nx = active_extent(input.x_mask);
  const auto nb = active_extent(input.b_mask);
  if (nx == 0) throw ContractError("sentence input has no active position");
  if (nb == 0) throw ContractError("biased-token input has no active position");
  const auto x_ids = input.x_ids.first(nx);
  const auto x_mask = input.x_mask.first(nx);
  const auto b_ids = input.b_ids.first(nb);
  const auto b_mask = input.b_mask.first(nb);

  Features f;
  f.x_rows = encode(x_ids, x_mask, opts, 0);
  f.b_rows = encode(b_ids, b_mask, opts, 1);
  f.x_pooled = ad::mean_pool(f.x_rows, x_mask, 0);
  f.b_pooled = ad::mean_pool(f.b_rows, b_mask, 0);
  f.ensemble = cross_attention_ensemble(f.x_rows, f.b_rows, x_mask, b_mask);
  return f;
}

BranchValues Model::branches(const Features& f, const ForwardOptions& opts) const {
  BranchValues out;
  out.y_e = head(Branch::ensemble, f.ensemble, opts);
  out.y_x = head(Branch::sentence, f.x_pooled, opts);
  out.y_b = head(Branch::bias, f.b_pooled, opts);
  out.y_b_isolated = head(Branch::bias, ad::stop_gradient(f.b_pooled), opts);
  return out;
}

ScenarioLogits Model::branch_forward(const Features& f, Scenario scenario) const {
  const auto y_b = to_scores(head(Branch::bias, f.b_pooled));
  if (scenario == Scenario::counterfactual) {
    return make_counterfactual(invariant_response(Branch::ensemble),
                               invariant_response(Branch::sentence), y_b);
  }
  return make_factual(to_scores(head(Branch::ensemble, f.ensemble)),
                      to_scores(head(Branch::sentence, f.x_pooled)), y_b);
}

Scores Model::invariant_response(Branch b) const { return to_scores(param(constant_name(b))); }

void Model::set_invariant_response(Branch b, const Scores& value) {
  auto data = param(constant_name(b)).mutable_data();
  data[0] = value[0];
  data[1] = value[1];
}

Scores Model::bias_reference() const {
  const std::int32_t id = kNoBiasId;
  const std::uint8_t on = 1;
  const auto rows = encode(std::span(&id, 1), std::span(&on, 1));
  return to_scores(head(Branch::bias, ad::mean_pool(rows, std::span(&on, 1), 0)));
}

}  // namespace ccdf
