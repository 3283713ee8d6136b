#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ccdf/autodiff.hpp"
#include "ccdf/dataset.hpp"
#include "ccdf/model.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("ccdf-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::vector<double> normal_vec(std::mt19937_64& rng, std::size_t n, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

inline ccdf::ad::Value random_param(std::mt19937_64& rng, ccdf::ad::Shape shape, double sd = 1.0) {
  const auto n = ccdf::ad::numel(shape);
  return ccdf::ad::Value::parameter(std::move(shape), normal_vec(rng, n, sd));
}

struct GradCheck {
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
  std::size_t coordinates = 0;
};

// Central differences against backward() for every coordinate of every
// parameter. Relative error uses max(|a|, |n|, floor) as the denominator.
inline GradCheck check_gradients(const std::function<ccdf::ad::Value()>& loss_fn,
                                 std::vector<ccdf::ad::Value> params, double h = 1e-5,
                                 double floor = 1e-6) {
  for (auto& p : params) p.zero_grad();
  ccdf::ad::backward(loss_fn());
  GradCheck out;
  for (auto& p : params) {
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    auto data = p.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss_fn().item();
      data[i] = saved - h;
      const double down = loss_fn().item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      out.max_rel_error = std::max(out.max_rel_error, std::abs(a - numeric) / denom);
      out.max_abs_analytic = std::max(out.max_abs_analytic, std::abs(a));
      ++out.coordinates;
    }
  }
  return out;
}

inline ccdf::Example ex(const std::string& text, int label) { return ccdf::make_example(text, label); }

// A vocabulary-sized-12 model with width 4 and hidden 6; small enough for
// exhaustive finite differences.
inline ccdf::ModelConfig tiny_config(std::size_t vocab = 12) {
  ccdf::ModelConfig c;
  c.vocab_size = vocab;
  c.embed_dim = 4;
  c.hidden = 6;
  c.dropout = 0.0;
  c.embed_init_scale = 1.0;
  c.head_bias_init = 0.5;
  c.head_out_scale = 1.0;
  return c;
}

struct RandomInput {
  std::vector<std::int32_t> x_ids, b_ids;
  std::vector<std::uint8_t> x_mask, b_mask;
  ccdf::ModelInput view() const { return {x_ids, x_mask, b_ids, b_mask}; }
};

// Ids drawn from [4, vocab), trailing pads after a random active length.
inline RandomInput random_input(std::mt19937_64& rng, std::size_t vocab, std::size_t lx,
                                std::size_t lb) {
  RandomInput in;
  std::uniform_int_distribution<std::int32_t> id(4, static_cast<std::int32_t>(vocab) - 1);
  std::uniform_int_distribution<std::size_t> nx(1, lx), nb(1, lb);
  const auto ax = nx(rng), ab = nb(rng);
  for (std::size_t i = 0; i < lx; ++i) {
    in.x_ids.push_back(i < ax ? id(rng) : 0);
    in.x_mask.push_back(i < ax);
  }
  for (std::size_t i = 0; i < lb; ++i) {
    in.b_ids.push_back(i < ab ? id(rng) : 0);
    in.b_mask.push_back(i < ab);
  }
  return in;
}

}  // namespace testing
