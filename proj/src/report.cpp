#include "ccdf/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ccdf/error.hpp"

namespace ccdf {
namespace {

using nlohmann::json;

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json confusion_json(const Confusion& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

Confusion confusion_from_json(const json& j) {
  return {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(),
          j.at("tn").get<std::size_t>(), j.at("fn").get<std::size_t>()};
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * *v);
  return buf;
}

}  // namespace

EvalReport build_report(std::span<const int> predictions, std::span<const int> labels,
                        std::span<const std::set<Category>> matched) {
  if (predictions.size() != labels.size() || matched.size() != labels.size()) {
    throw ContractError("build_report: predictions, labels and categories differ in length");
  }
  EvalReport r;
  r.size = labels.size();
  r.confusion = confusion_from(predictions, labels);
  r.accuracy = accuracy(r.confusion);
  r.f1_binary = f1_binary(r.confusion);
  r.f1_weighted = f1_weighted(r.confusion);
  r.fpr = fpr(r.confusion);
  for (Category c : kAllCategories) {
    CategoryReport cat;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!matched[i].count(c)) continue;
      cat.confusion.add(predictions[i], labels[i]);
      ++cat.size;
    }
    cat.f1 = f1_binary(cat.confusion);
    cat.fpr = fpr(cat.confusion);
    r.categories[c] = cat;
  }
  return r;
}

OodReport build_ood_report(std::span<const int> predictions, std::span<const int> labels) {
  OodReport r;
  r.size = labels.size();
  r.confusion = confusion_from(predictions, labels);
  r.accuracy = accuracy(r.confusion);
  r.f1_weighted = f1_weighted(r.confusion);
  return r;
}

json to_json(const EvalReport& r) {
  json j;
  j["mode"] = r.mode;
  j["inference"] = r.inference;
  j["size"] = r.size;
  j["confusion"] = confusion_json(r.confusion);
  j["accuracy"] = opt(r.accuracy);
  j["f1_binary"] = opt(r.f1_binary);
  j["f1_weighted"] = opt(r.f1_weighted);
  j["fpr"] = opt(r.fpr);
  json cats = json::object();
  for (const auto& [c, cat] : r.categories) {
    cats[std::string(to_string(c))] = {{"size", cat.size},
                                       {"confusion", confusion_json(cat.confusion)},
                                       {"f1", opt(cat.f1)},
                                       {"fpr", opt(cat.fpr)}};
  }
  j["categories"] = cats;
  if (r.ood) {
    j["ood"] = {{"size", r.ood->size},
                {"confusion", confusion_json(r.ood->confusion)},
                {"accuracy", opt(r.ood->accuracy)},
                {"f1_weighted", opt(r.ood->f1_weighted)}};
  } else {
    j["ood"] = nullptr;
  }
  return j;
}

EvalReport report_from_json(const json& j) {
  try {
    EvalReport r;
    r.mode = j.at("mode").get<std::string>();
    r.inference = j.at("inference").get<std::string>();
    r.size = j.at("size").get<std::size_t>();
    r.confusion = confusion_from_json(j.at("confusion"));
    r.accuracy = opt_from(j, "accuracy");
    r.f1_binary = opt_from(j, "f1_binary");
    r.f1_weighted = opt_from(j, "f1_weighted");
    r.fpr = opt_from(j, "fpr");
    for (const auto& [name, cj] : j.at("categories").items()) {
      const auto c = parse_category(name);
      if (!c) throw ParseError("report: unknown category '" + name + "'");
      CategoryReport cat;
      cat.size = cj.at("size").get<std::size_t>();
      cat.confusion = confusion_from_json(cj.at("confusion"));
      cat.f1 = opt_from(cj, "f1");
      cat.fpr = opt_from(cj, "fpr");
      r.categories[*c] = cat;
    }
    if (j.contains("ood") && !j.at("ood").is_null()) {
      const auto& oj = j.at("ood");
      OodReport ood;
      ood.size = oj.at("size").get<std::size_t>();
      ood.confusion = confusion_from_json(oj.at("confusion"));
      ood.accuracy = opt_from(oj, "accuracy");
      ood.f1_weighted = opt_from(oj, "f1_weighted");
      r.ood = ood;
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report JSON: ") + e.what());
  }
}

namespace {

constexpr const char* kRowFormat = "%-18s| %-7s%-8s| %-7s%-8s| %-7s%-8s| %-7s%-8s| %-7s%s\n";

std::string render_row(const std::string& label, const std::array<std::string, 10>& c) {
  char line[256];
  std::snprintf(line, sizeof(line), kRowFormat, label.c_str(), c[0].c_str(), c[1].c_str(),
                c[2].c_str(), c[3].c_str(), c[4].c_str(), c[5].c_str(), c[6].c_str(),
                c[7].c_str(), c[8].c_str(), c[9].c_str());
  return line;
}

}  // namespace

const std::vector<std::string>& table_columns() {
  static const std::vector<std::string> columns = {"acc",    "f1",      "nOI.f1",  "nOI.fpr",
                                                   "OI.f1",  "OI.fpr",  "OnI.f1",  "OnI.fpr",
                                                   "ood.acc", "ood.f1w"};
  return columns;
}

std::array<std::optional<double>, 10> table_values(const EvalReport& r) {
  const auto cat = [&](Category c) {
    auto it = r.categories.find(c);
    return it == r.categories.end() ? CategoryReport{} : it->second;
  };
  const auto noi = cat(Category::nOI), oi = cat(Category::OI), oni = cat(Category::OnI);
  return {r.accuracy,
          r.f1_binary,
          noi.f1,
          noi.fpr,
          oi.f1,
          oi.fpr,
          oni.f1,
          oni.fpr,
          r.ood ? r.ood->accuracy : std::nullopt,
          r.ood ? r.ood->f1_weighted : std::nullopt};
}

std::string render_table(std::span<const EvalReport> rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s| %-15s| %-15s| %-15s| %-15s| %s\n", "", "Test", "nOI",
                "OI", "OnI", "OOD");
  out << line;
  out << render_row("Method", {"Acc", "F1", "F1", "FPR", "F1", "FPR", "F1", "FPR", "Acc", "F1"});
  out << std::string(96, '-') << '\n';
  for (const auto& r : rows) {
    const auto values = table_values(r);
    std::array<std::string, 10> cells;
    for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = cell(values[i]);
    out << render_row(r.mode + "/" + r.inference, cells);
  }
  return out.str();
}

std::map<std::string, MetricSummary> summarize_runs(std::span<const EvalReport> runs) {
  const auto& columns = table_columns();
  std::map<std::string, MetricSummary> out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    std::vector<double> xs;
    for (const auto& r : runs)
      if (const auto v = table_values(r)[i]) xs.push_back(*v);
    MetricSummary s;
    s.n = xs.size();
    if (!xs.empty()) {
      double sum = 0.0;
      for (double x : xs) sum += x;
      const double mean = sum / static_cast<double>(xs.size());
      s.mean = mean;
      if (xs.size() >= 2) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
      }
    }
    out[columns[i]] = s;
  }
  return out;
}

json to_json(const std::map<std::string, MetricSummary>& summary) {
  json j = json::object();
  for (const auto& [key, s] : summary) j[key] = {{"n", s.n}, {"mean", opt(s.mean)}, {"sd", opt(s.sd)}};
  return j;
}

std::string render_summary(const std::map<std::string, MetricSummary>& summary) {
  std::array<std::string, 10> means, sds;
  const auto& columns = table_columns();
  for (std::size_t i = 0; i < columns.size(); ++i) {
    auto it = summary.find(columns[i]);
    means[i] = cell(it == summary.end() ? std::nullopt : it->second.mean);
    sds[i] = cell(it == summary.end() ? std::nullopt : it->second.sd);
  }
  return render_row("mean", means) + render_row("s.d.", sds);
}

}  // namespace ccdf
