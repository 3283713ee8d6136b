#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ccdf/autodiff.hpp"

namespace ccdf {

struct AdamWConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// AdamW with bias correction and decoupled weight decay. Moment buffers are
// bound to parameter position, so callers must pass the same parameter list
// (same order) on every step. Gradients are read, never cleared.
class AdamW {
 public:
  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  void step(std::span<ad::Value> params);

  std::size_t step_count() const noexcept { return step_; }
  const AdamWConfig& config() const noexcept { return config_; }
  std::span<const double> first_moment(std::size_t i) const { return m_.at(i); }
  std::span<const double> second_moment(std::size_t i) const { return v_.at(i); }

 private:
  AdamWConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t step_ = 0;
};

}  // namespace ccdf
