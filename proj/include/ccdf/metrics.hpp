#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace ccdf {

// Binary confusion counts with toxic (label 1) as the positive class.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  void add(int prediction, int label);
  Confusion& operator+=(const Confusion& other);
  bool operator==(const Confusion&) const = default;
};

Confusion confusion_from(std::span<const int> predictions, std::span<const int> labels);

// Swaps the roles of the classes (non-toxic becomes positive).
Confusion swap_classes(const Confusion& c);

// Each metric is absent (nullopt) when its denominator is zero.
std::optional<double> accuracy(const Confusion& c);
std::optional<double> precision(const Confusion& c);
std::optional<double> recall(const Confusion& c);
std::optional<double> f1_binary(const Confusion& c);
std::optional<double> fpr(const Confusion& c);

// Support-weighted mean of per-class F1. Classes with zero support are
// skipped; an absent F1 on a supported class makes the result absent.
std::optional<double> f1_weighted(std::span<const std::optional<double>> per_class_f1,
                                  std::span<const std::size_t> supports);
std::optional<double> f1_weighted(const Confusion& c);

}  // namespace ccdf
