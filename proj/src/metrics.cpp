#include "ccdf/metrics.hpp"

#include <string>

#include "ccdf/error.hpp"

namespace ccdf {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void Confusion::add(int prediction, int label) {
  if ((prediction != 0 && prediction != 1) || (label != 0 && label != 1)) {
    throw ValidationError("confusion counts take binary predictions and labels");
  }
  if (label == 1) {
    (prediction == 1 ? tp : fn) += 1;
  } else {
    (prediction == 1 ? fp : tn) += 1;
  }
}

Confusion& Confusion::operator+=(const Confusion& other) {
  tp += other.tp;
  fp += other.fp;
  tn += other.tn;
  fn += other.fn;
  return *this;
}

Confusion confusion_from(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw ContractError("confusion_from: " + std::to_string(predictions.size()) +
                        " predictions for " + std::to_string(labels.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) c.add(predictions[i], labels[i]);
  return c;
}

Confusion swap_classes(const Confusion& c) { return {c.tn, c.fn, c.tp, c.fp}; }

std::optional<double> accuracy(const Confusion& c) { return ratio(c.tp + c.tn, c.total()); }
std::optional<double> precision(const Confusion& c) { return ratio(c.tp, c.tp + c.fp); }
std::optional<double> recall(const Confusion& c) { return ratio(c.tp, c.tp + c.fn); }
std::optional<double> fpr(const Confusion& c) { return ratio(c.fp, c.fp + c.tn); }

std::optional<double> f1_binary(const Confusion& c) {
  const auto p = precision(c);
  const auto r = recall(c);
  if (!p || !r) return std::nullopt;
  // 2pr/(p+r) as one integer ratio.
  return ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
}

std::optional<double> f1_weighted(std::span<const std::optional<double>> per_class_f1,
                                  std::span<const std::size_t> supports) {
  if (per_class_f1.size() != supports.size()) {
    throw ContractError("f1_weighted: one support per class required");
  }
  double weighted = 0.0;
  std::size_t total = 0;
  for (std::size_t k = 0; k < supports.size(); ++k) {
    if (supports[k] == 0) continue;
    if (!per_class_f1[k]) return std::nullopt;
    weighted += *per_class_f1[k] * static_cast<double>(supports[k]);
    total += supports[k];
  }
  if (total == 0) return std::nullopt;
  return weighted / static_cast<double>(total);
}

std::optional<double> f1_weighted(const Confusion& c) {
  const std::optional<double> f1[2] = {f1_binary(swap_classes(c)), f1_binary(c)};
  const std::size_t support[2] = {c.tn + c.fp, c.tp + c.fn};
  return f1_weighted(f1, support);
}

}  // namespace ccdf
