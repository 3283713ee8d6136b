#include <doctest.h>

#include <cmath>
#include <random>

#include "ccdf/error.hpp"
#include "ccdf/model.hpp"
#include "ccdf/train.hpp"
#include "support.hpp"

using namespace ccdf;
using ad::Value;

namespace {

double guard() { return std::log(1e-12 / (1.0 + 1e-12)); }

void fill(Value& v, double x) {
  for (auto& d : v.mutable_data()) d = x;
}

// Four cross-entropy terms with the bias term left differentiable, so
// finite differences see exactly the graph backward() walks.
Value loss_for(const Model& m, const testing::RandomInput& in, int label) {
  const auto f = m.features(in.view());
  auto out = m.branches(f);
  out.y_b_isolated = out.y_b;
  const std::vector<BranchValues> b{out};
  const std::vector<int> y{label};
  return total_loss(b, y).total;
}

}  // namespace

TEST_CASE("fusion at atanh(0.5) in every branch") {
  const double a = std::atanh(0.5);
  const auto out = fuse(Scores{a, a}, Scores{a, a}, Scores{a, a});
  CHECK(std::abs(out[0] - std::log(0.125 / 1.125)) < 1e-12);
  CHECK(std::abs(out[0] - (-2.1972)) < 1e-4);
  CHECK(out[1] == out[0]);
}

TEST_CASE("non-positive products take the guard value") {
  const auto neg = fuse(Scores{-1.0, 2.0}, Scores{1.0, -3.0}, Scores{0.5, 0.5});
  CHECK(std::abs(neg[0] - guard()) < 1e-9);
  CHECK(std::abs(neg[1] - guard()) < 1e-9);
  CHECK(std::abs(guard() - (-27.631)) < 1e-3);
  const auto zero = fuse(Scores{0.0, 1.0}, Scores{1.0, 1.0}, Scores{1.0, 1.0});
  CHECK(std::abs(zero[0] - guard()) < 1e-9);
  CHECK(zero[1] > guard());
  CHECK(std::abs(fuse(Scores{0.0, 0.0}, Scores{1.0, 1.0})[0] - guard()) < 1e-9);
}

TEST_CASE("fusion is symmetric and monotone in positive branch scores") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int i = 0; i < 200; ++i) {
    const Scores a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
    const auto abc = fuse(a, b, c);
    for (const auto& other : {fuse(c, a, b), fuse(b, c, a), fuse(b, a, c)}) {
      CHECK(other[0] == doctest::Approx(abc[0]).epsilon(1e-14));
      CHECK(other[1] == doctest::Approx(abc[1]).epsilon(1e-14));
    }
    const Scores a_up{a[0] + 0.1, a[1] + 0.1};
    const auto up = fuse(a_up, b, c);
    CHECK(up[0] > abc[0]);
    CHECK(up[1] > abc[1]);
    CHECK(abc[0] < 0.0);
  }
}

TEST_CASE("graph fusion matches scalar fusion") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    auto e = testing::random_param(rng, {2});
    auto x = testing::random_param(rng, {2});
    auto b = testing::random_param(rng, {2});
    const auto g = to_scores(fuse(e, x, b));
    const auto s = fuse(to_scores(e), to_scores(x), to_scores(b));
    CHECK(g[0] == doctest::Approx(s[0]).epsilon(1e-14));
    CHECK(g[1] == doctest::Approx(s[1]).epsilon(1e-14));
    const auto g2 = to_scores(fuse(x, b));
    const auto s2 = fuse(to_scores(x), to_scores(b));
    CHECK(g2[0] == doctest::Approx(s2[0]).epsilon(1e-14));
  }
}

TEST_CASE("encoding: pads are zero rows and both paths share the encoder") {
  Model m(testing::tiny_config(), 1);
  const std::vector<std::int32_t> ids{5, 0, 0};
  const std::vector<std::uint8_t> none{0, 0, 0};
  const auto zeros = m.encode(ids, none);
  for (double v : zeros.data()) CHECK(v == 0.0);

  const std::vector<std::int32_t> same{7, 9};
  const std::vector<std::uint8_t> on{1, 1};
  const auto x = m.encode(same, on, {}, 0);
  const auto b = m.encode(same, on, {}, 1);
  CHECK(std::vector<double>(x.data().begin(), x.data().end()) ==
        std::vector<double>(b.data().begin(), b.data().end()));

  const std::vector<std::int32_t> bad{12};
  const std::vector<std::uint8_t> one{1};
  CHECK_THROWS_AS(m.encode(bad, one), ValidationError);
  CHECK_THROWS_AS(m.encode(same, one), ShapeError);
}

TEST_CASE("with an identity mixing layer a token encodes as tanh of its embedding") {
  Model m(testing::tiny_config(), 4);
  auto& w = m.param("encoder.mix.w");
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) w.mutable_data()[i * 4 + j] = i == j ? 1.0 : 0.0;
  fill(m.param("encoder.mix.b"), 0.0);
  const std::vector<std::int32_t> id{6};
  const std::vector<std::uint8_t> on{1};
  const auto rows = m.encode(id, on);
  const auto table = m.param("encoder.embed").data();
  for (std::size_t k = 0; k < 4; ++k) CHECK(rows[k] == doctest::Approx(std::tanh(table[6 * 4 + k])));
}

TEST_CASE("cross attention follows S = B X^T and averages over bias rows") {
  Model m(testing::tiny_config(), 0);
  const auto x = Value::constant({2, 2}, {1, 0, 0, 1});
  const std::vector<std::uint8_t> two{1, 1}, one{1};
  const auto e = m.cross_attention_ensemble(x, Value::constant({1, 2}, {1, 0}), two, one);
  CHECK(std::abs(e[0] - 0.7311) < 1e-4);
  CHECK(std::abs(e[1] - 0.2689) < 1e-4);

  const auto x3 = Value::constant({3, 2}, {1, 2, 3, 4, 5, 6});
  const std::vector<std::uint8_t> three{1, 1, 1};
  const auto uniform = m.cross_attention_ensemble(x3, Value::constant({1, 2}, {0, 0}), three, one);
  CHECK(uniform[0] == doctest::Approx(3.0));
  CHECK(uniform[1] == doctest::Approx(4.0));

  const auto single = m.cross_attention_ensemble(x, Value::constant({1, 2}, {0.3, -0.7}), two, one);
  const auto twice =
      m.cross_attention_ensemble(x, Value::constant({2, 2}, {0.3, -0.7, 0.3, -0.7}), two, two);
  CHECK(twice[0] == doctest::Approx(single[0]).epsilon(1e-15));
  CHECK(twice[1] == doctest::Approx(single[1]).epsilon(1e-15));

  const std::vector<std::uint8_t> off{0, 0};
  CHECK_THROWS_AS(m.cross_attention_ensemble(x, Value::constant({1, 2}, {1, 0}), off, one),
                  ContractError);
}

TEST_CASE("the counterfactual scenario only sees the bias input") {
  Model m(testing::tiny_config(), 5);
  m.set_invariant_response(Branch::ensemble, {0.3, -0.2});
  m.set_invariant_response(Branch::sentence, {1.5, 0.25});
  std::mt19937_64 rng(8);
  auto a = testing::random_input(rng, 12, 6, 3);
  auto b = testing::random_input(rng, 12, 6, 3);
  b.b_ids = a.b_ids;
  b.b_mask = a.b_mask;
  const auto ca = m.branch_forward(m.features(a.view()), Scenario::counterfactual);
  const auto cb = m.branch_forward(m.features(b.view()), Scenario::counterfactual);
  CHECK(ca.scenario == Scenario::counterfactual);
  CHECK(ca.y_e == Scores{0.3, -0.2});
  CHECK(ca.y_x == Scores{1.5, 0.25});
  CHECK(ca.y_b == cb.y_b);
  CHECK(ca.fused == cb.fused);
  const auto fa = m.branch_forward(m.features(a.view()), Scenario::factual);
  CHECK(fa.y_b == ca.y_b);
  CHECK(fa.fused == fuse(fa.y_e, fa.y_x, fa.y_b));
}

TEST_CASE("zero head weights leave only the head biases") {
  Model m(testing::tiny_config(), 6);
  for (Branch br : {Branch::ensemble, Branch::sentence, Branch::bias}) {
    auto params = m.branch_params(br);
    fill(params[0], 0.0);
    fill(params[1], 0.0);
    fill(params[2], 0.0);
    params[3].mutable_data()[0] = 0.4;
    params[3].mutable_data()[1] = -0.9;
  }
  std::mt19937_64 rng(1);
  const auto in = testing::random_input(rng, 12, 5, 3);
  const auto f = m.branch_forward(m.features(in.view()), Scenario::factual);
  for (const auto& s : {f.y_e, f.y_x, f.y_b}) CHECK(s == Scores{0.4, -0.9});
  CHECK(m.bias_reference() == Scores{0.4, -0.9});
}

TEST_CASE("the B path goes through the shared encoder") {
  Model m(testing::tiny_config(), 7);
  std::mt19937_64 rng(2);
  const auto in = testing::random_input(rng, 12, 5, 3);
  const auto before = m.branch_forward(m.features(in.view()), Scenario::counterfactual).y_b;
  const auto id = static_cast<std::size_t>(in.b_ids[0]);
  m.param("encoder.embed").mutable_data()[id * 4] += 0.5;
  const auto after = m.branch_forward(m.features(in.view()), Scenario::counterfactual).y_b;
  CHECK(before != after);
}

TEST_CASE("full forward gradients match finite differences") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Model m(testing::tiny_config(), seed);
    std::mt19937_64 rng(seed + 100);
    const auto in = testing::random_input(rng, 12, 5, 3);
    const int label = static_cast<int>(seed % 2);
    std::vector<Value> params;
    for (const auto& name : m.param_names()) params.push_back(m.param(name));
    const auto r = testing::check_gradients([&] { return loss_for(m, in, label); }, params);
    CHECK(r.max_rel_error < 1e-4);
    CHECK(r.max_abs_analytic > 0.0);
  }
}

TEST_CASE("features need at least one active position on each side") {
  Model m(testing::tiny_config(), 0);
  const std::vector<std::int32_t> x{5, 6}, b{0};
  const std::vector<std::uint8_t> on{1, 1}, off{0};
  CHECK_THROWS_AS(m.features({x, on, b, off}), ContractError);
  CHECK_THROWS_AS(m.features({b, off, x, on}), ContractError);
}

TEST_CASE("parameter names and checkpoint arrays") {
  Model m(testing::tiny_config(), 3);
  const std::vector<std::string> expected{
      "encoder.embed", "encoder.mix.w", "encoder.mix.b",
      "branch.e.w1", "branch.e.b1", "branch.e.w2", "branch.e.b2",
      "branch.x.w1", "branch.x.b1", "branch.x.w2", "branch.x.b2",
      "branch.b.w1", "branch.b.b1", "branch.b.w2", "branch.b.b2",
      "const.c_e", "const.c_x"};
  CHECK(m.param_names() == expected);

  const auto arrays = m.to_arrays();
  const auto back = Model::from_arrays(arrays, 0.0);
  CHECK(back.to_arrays() == arrays);
  CHECK(back.config().embed_dim == 4);
  CHECK(back.config().hidden == 6);
  CHECK(back.vocab_size() == 12);

  auto bad = arrays;
  bad[1].shape = {2, 8};
  CHECK_THROWS_AS(Model::from_arrays(bad), ShapeError);
  auto missing = arrays;
  missing.pop_back();
  CHECK_THROWS_AS(Model::from_arrays(missing), ValidationError);
  CHECK_THROWS_AS(m.param("nope"), ValidationError);
  CHECK_THROWS_AS(m.invariant_response(Branch::bias), ContractError);
}

TEST_CASE("same seed, same initial parameters") {
  CHECK(Model(testing::tiny_config(), 9).to_arrays() == Model(testing::tiny_config(), 9).to_arrays());
  CHECK(Model(testing::tiny_config(), 9).to_arrays() != Model(testing::tiny_config(), 10).to_arrays());
}
