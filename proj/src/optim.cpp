#include "ccdf/optim.hpp"

#include <cmath>

#include "ccdf/error.hpp"

namespace ccdf {

void AdamW::step(std::span<ad::Value> params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  } else if (m_.size() != params.size()) {
    throw ContractError("AdamW::step: parameter list changed between steps");
  }

  ++step_;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  const double lr = config_.learning_rate;
  const double decay = 1.0 - lr * config_.weight_decay;

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k].mutable_data();
    const auto grad = params[k].grad();
    auto& m = m_[k];
    auto& v = v_[k];
    if (m.size() != data.size()) {
      throw ContractError("AdamW::step: parameter " + std::to_string(k) + " changed size");
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      data[i] = data[i] * decay - lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace ccdf
