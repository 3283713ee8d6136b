#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccdf/lexicon.hpp"
#include "ccdf/metrics.hpp"

namespace ccdf {

struct CategoryReport {
  std::size_t size = 0;
  Confusion confusion;
  std::optional<double> f1;
  std::optional<double> fpr;
};

// Out-of-distribution summary: accuracy and weighted F1 only.
struct OodReport {
  std::size_t size = 0;
  Confusion confusion;
  std::optional<double> accuracy;
  std::optional<double> f1_weighted;
};

struct EvalReport {
  std::string mode;
  std::string inference;
  std::size_t size = 0;
  Confusion confusion;
  std::optional<double> accuracy;
  std::optional<double> f1_binary;
  std::optional<double> f1_weighted;
  std::optional<double> fpr;
  std::map<Category, CategoryReport> categories;  // always holds nOI, OI, OnI
  std::optional<OodReport> ood;
};

// Subsets are every example whose matched categories include the category;
// one example can land in several subsets.
EvalReport build_report(std::span<const int> predictions, std::span<const int> labels,
                        std::span<const std::set<Category>> matched);
OodReport build_ood_report(std::span<const int> predictions, std::span<const int> labels);

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

// Plain-text table: Test (Acc, F1) | nOI / OI / OnI (F1, FPR) | OOD (Acc, F1w),
// percentages with two decimals, '-' for absent values.
std::string render_table(std::span<const EvalReport> rows);

// Table column keys, in display order: acc, f1, nOI.f1, nOI.fpr, OI.f1,
// OI.fpr, OnI.f1, OnI.fpr, ood.acc, ood.f1w.
const std::vector<std::string>& table_columns();
std::array<std::optional<double>, 10> table_values(const EvalReport& report);

struct MetricSummary {
  std::size_t n = 0;  // runs where the metric was present
  std::optional<double> mean;
  std::optional<double> sd;  // sample s.d., needs n >= 2
};

// Per table column, mean and s.d. over the runs that report it.
std::map<std::string, MetricSummary> summarize_runs(std::span<const EvalReport> runs);
nlohmann::json to_json(const std::map<std::string, MetricSummary>& summary);
// "mean" and "s.d." rows in the render_table layout, without a header.
std::string render_summary(const std::map<std::string, MetricSummary>& summary);

}  // namespace ccdf
