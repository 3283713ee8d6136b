#include "ccdf/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ccdf/checkpoint.hpp"
#include "ccdf/dataset.hpp"
#include "ccdf/lexicon.hpp"
#include "ccdf/report.hpp"
#include "ccdf/train.hpp"

namespace ccdf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  f << text;
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y%m%d-%H%M%S");
  return s.str();
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string vec(const Scores& s) { return "[" + fixed(s[0], 4) + ", " + fixed(s[1], 4) + "]"; }

// Applies key=value lines to the options of `app` the command line left
// unset. Keys are long flag names without the leading dashes.
void apply_config_file(CLI::App& app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  CLI::ConfigBase parser;
  std::vector<CLI::ConfigItem> items;
  try {
    items = parser.from_config(in);
  } catch (const CLI::ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
  for (const auto& item : items) {
    auto* option = app.get_option_no_throw("--" + item.name);
    if (option == nullptr || item.name == "config") {
      throw ValidationError(path + ": unknown key '" + item.name + "'");
    }
    if (option->count() > 0) continue;
    try {
      for (const auto& v : item.inputs) option->add_result(v);
      option->run_callback();
    } catch (const CLI::Error& e) {
      throw ValidationError(path + ": " + e.what());
    }
  }
}

TrainedModel load_trained(const fs::path& checkpoint, const std::string& vocab_flag) {
  const fs::path vocab_path =
      vocab_flag.empty() ? checkpoint.parent_path() / "vocab.txt" : fs::path(vocab_flag);
  return from_checkpoint(read_checkpoint(checkpoint), Vocab::load(vocab_path));
}

// One row per lexicon token present in the data.
std::string token_table(std::span<const Example> examples, const Lexicon& lexicon) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-16s %8s %10s %10s\n", "Token", "Toxic", "Non-Toxic",
                "Ratio (%)");
  out << line;
  std::size_t absent = 0;
  for (const auto& entry : lexicon.entries()) {
    std::size_t toxic = 0, clean = 0;
    for (const auto& ex : examples) {
      if (std::find(ex.tokens.begin(), ex.tokens.end(), entry.surface) == ex.tokens.end()) continue;
      (ex.label == 1 ? toxic : clean) += 1;
    }
    if (toxic + clean == 0) {
      ++absent;
      continue;
    }
    const auto r = toxic_ratio_from_counts(toxic, clean);
    std::snprintf(line, sizeof(line), "%-16s %8zu %10zu %10.2f\n", entry.surface.c_str(), r.toxic,
                  r.nontoxic, r.ratio_percent);
    out << line;
  }
  if (absent > 0) out << "* " << absent << " lexicon token(s) absent from the data\n";
  return out.str();
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::uint64_t seed = 0;
  std::string out = "data";
  double spurious_rate = 0.95;
  std::size_t n_train = 4000;
  std::size_t n_test = 1000;
};

void split_line(std::ostream& out, const char* name, std::span<const Example> split,
                std::string_view bias) {
  std::size_t toxic = 0, toxic_biased = 0, clean_biased = 0;
  for (const auto& ex : split) {
    const bool biased = std::find(ex.tokens.begin(), ex.tokens.end(), bias) != ex.tokens.end();
    if (ex.label == 1) {
      ++toxic;
      toxic_biased += biased;
    } else {
      clean_biased += biased;
    }
  }
  const auto frac = [](std::size_t a, std::size_t b) { return b ? double(a) / double(b) : 0.0; };
  char line[200];
  std::snprintf(line, sizeof(line), "%-13s %6zu  toxic %.3f  P(%s|toxic) %.3f  P(%s|non-toxic) %.3f\n",
                name, split.size(), frac(toxic, split.size()), std::string(bias).c_str(),
                frac(toxic_biased, toxic), std::string(bias).c_str(),
                frac(clean_biased, split.size() - toxic));
  out << line;
}

int cmd_gen(const GenArgs& a, std::ostream& out) {
  const auto corpus = generate_synthetic_corpus(a.seed, a.n_train, a.n_test, a.spurious_rate);
  const fs::path dir(a.out);
  make_dirs(dir);
  save_jsonl(dir / "train.jsonl", corpus.train);
  save_jsonl(dir / "valid.jsonl", corpus.valid);
  save_jsonl(dir / "test_iid.jsonl", corpus.test_iid);
  save_jsonl(dir / "test_flipped.jsonl", corpus.test_flipped);
  save_lexicon(dir / "lexicon.csv", corpus.lexicon);

  out << "wrote " << dir.string() << "/{train,valid,test_iid,test_flipped}.jsonl, lexicon.csv\n";
  split_line(out, "train", corpus.train, corpus.bias_token);
  split_line(out, "valid", corpus.valid, corpus.bias_token);
  split_line(out, "test_iid", corpus.test_iid, corpus.bias_token);
  split_line(out, "test_flipped", corpus.test_flipped, corpus.bias_token);
  out << "\ntrain split:\n" << token_table(corpus.train, corpus.lexicon);
  return kExitOk;
}

struct StatsArgs {
  std::string data;
  std::string lexicon;
};

int cmd_stats(const StatsArgs& a, std::ostream& out) {
  const auto examples = load_jsonl(a.data);
  const auto lexicon = load_lexicon(a.lexicon);
  out << token_table(examples, lexicon);
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::string out;
  std::string data;
  std::string train;
  std::string valid;
  std::string lexicon;
  std::string mode = "ccdf";
  std::size_t runs = 1;
  TrainConfig cfg;
};

fs::path resolve(const std::string& flag, const std::string& data_dir, const char* file) {
  if (!flag.empty()) return flag;
  if (!data_dir.empty()) return fs::path(data_dir) / file;
  throw ValidationError(std::string("no ") + file + " given; pass --data or the explicit flag");
}

int cmd_train(TrainArgs a, const std::string& echo, std::ostream& out) {
  a.cfg.mode = parse_mode(a.mode);
  if (a.runs == 0) throw ValidationError("--runs must be at least 1");
  const fs::path root = a.out.empty() ? fs::path("runs") / timestamp() : fs::path(a.out);
  make_dirs(root);
  write_text(root / "config.txt", echo);

  const auto train_set = load_jsonl(resolve(a.train, a.data, "train.jsonl"));
  const auto valid_set = load_jsonl(resolve(a.valid, a.data, "valid.jsonl"));
  const auto lexicon = load_lexicon(resolve(a.lexicon, a.data, "lexicon.csv"));

  json summary = json::array();
  std::vector<double> f1s;
  for (std::size_t k = 0; k < a.runs; ++k) {
    TrainConfig cfg = a.cfg;
    cfg.seed = a.cfg.seed + k;
    fs::path dir = root;
    if (a.runs > 1) {
      dir = root / ("run-" + std::to_string(k));
      make_dirs(dir);
      write_text(dir / "config.txt", echo + "# run " + std::to_string(k) + "\nseed=" +
                                         std::to_string(cfg.seed) + "\n");
    }
    const auto result = train(cfg, train_set, valid_set, lexicon);
    write_bytes(dir / "checkpoint.bin", result.best_checkpoint);
    result.best.vocab.save(dir / "vocab.txt");
    write_text(dir / "loss.csv", loss_log_csv(result.log));
    const auto report = evaluate(result.best, valid_set, lexicon, selection_inference(cfg.mode));
    json rj = to_json(report);
    rj["split"] = "valid";
    rj["best_step"] = result.best_step;
    rj["steps"] = result.steps;
    write_text(dir / "report.json", rj.dump(2) + "\n");

    out << dir.string() << ": " << result.steps << " steps, best step " << result.best_step
        << ", valid F1 "
        << (result.best_val_f1 ? fixed(100.0 * *result.best_val_f1, 2) : std::string("-")) << "\n";
    summary.push_back({{"run", k}, {"seed", cfg.seed}, {"dir", dir.string()},
                       {"best_step", result.best_step},
                       {"valid_f1", result.best_val_f1 ? json(*result.best_val_f1) : json(nullptr)}});
    if (result.best_val_f1) f1s.push_back(*result.best_val_f1);
  }
  if (a.runs > 1) {
    double mean = 0.0, ss = 0.0;
    for (double f : f1s) mean += f;
    if (!f1s.empty()) mean /= double(f1s.size());
    for (double f : f1s) ss += (f - mean) * (f - mean);
    const double sd = f1s.size() > 1 ? std::sqrt(ss / double(f1s.size() - 1)) : 0.0;
    write_text(root / "summary.json",
               json{{"runs", summary}, {"valid_f1_mean", mean}, {"valid_f1_sd", sd}}.dump(2) + "\n");
    out << "valid F1 over " << a.runs << " runs: " << fixed(100.0 * mean, 2) << " +- "
        << fixed(100.0 * sd, 2) << "\n";
  }
  return kExitOk;
}

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::string vocab;
  std::string data;
  std::string lexicon;
  std::string inference = "auto";
  std::string ood_data;
  std::string predictions;
  std::string report;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto examples = load_jsonl(a.data);
  const auto lexicon = load_lexicon(a.lexicon);
  std::vector<Example> ood;
  if (!a.ood_data.empty()) ood = load_jsonl(a.ood_data);
  if (!a.vocab.empty() && a.checkpoints.size() > 1) {
    throw ValidationError("--vocab applies to a single checkpoint; keep vocab.txt beside each");
  }

  std::ofstream predictions;
  if (!a.predictions.empty()) {
    predictions.open(a.predictions);
    if (!predictions) throw IoError("cannot open '" + a.predictions + "' for writing");
  }

  std::vector<EvalReport> reports;
  for (std::size_t k = 0; k < a.checkpoints.size(); ++k) {
    const auto trained = load_trained(a.checkpoints[k], a.vocab);
    const auto rule =
        a.inference == "auto" ? selection_inference(trained.mode) : parse_inference(a.inference);
    auto report = evaluate(trained, examples, lexicon, rule);
    if (!ood.empty()) {
      const auto preds = predict(trained, ood, lexicon, rule);
      std::vector<int> labels;
      for (const auto& ex : ood) labels.push_back(ex.label);
      report.ood = build_ood_report(preds, labels);
    }
    if (predictions.is_open()) {
      const auto preds = predict(trained, examples, lexicon, rule);
      for (std::size_t i = 0; i < examples.size(); ++i) {
        json rec = to_json(infer(trained, examples[i], lexicon));
        rec["checkpoint"] = a.checkpoints[k];
        rec["index"] = i;
        rec["label"] = examples[i].label;
        rec["prediction"] = preds[i];
        predictions << rec.dump() << '\n';
      }
    }
    reports.push_back(std::move(report));
  }

  json j;
  if (reports.size() == 1) {
    j = to_json(reports.front());
  } else {
    j["runs"] = json::array();
    for (const auto& r : reports) j["runs"].push_back(to_json(r));
    j["summary"] = to_json(summarize_runs(reports));
  }
  if (!a.report.empty()) {
    write_text(a.report, j.dump(2) + "\n");
  } else {
    out << j.dump(2) << "\n\n";
  }
  out << render_table(reports);
  if (reports.size() > 1) out << render_summary(summarize_runs(reports));
  return kExitOk;
}

struct InferArgs {
  std::string checkpoint;
  std::string vocab;
  std::string lexicon;
  std::vector<std::string> texts;
  bool json_lines = false;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const auto trained = load_trained(a.checkpoint, a.vocab);
  const auto lexicon = load_lexicon(a.lexicon);
  for (const auto& text : a.texts) {
    const auto r = infer(trained, make_example(text, 0), lexicon);
    if (a.json_lines) {
      out << to_json(r).dump() << '\n';
      continue;
    }
    out << "text:                 " << r.text << '\n';
    out << "biased tokens:        ";
    if (r.biased.empty()) out << "(none)";
    for (std::size_t i = 0; i < r.biased.tokens.size(); ++i) {
      out << (i ? ", " : "") << r.biased.tokens[i] << " (" << to_string(r.biased.token_categories[i])
          << ")";
    }
    out << '\n';
    out << "variant:              " << to_string(r.effects.variant) << '\n';
    out << "factual fused:        " << vec(r.scenarios.factual.fused) << '\n';
    out << "counterfactual fused: " << vec(r.scenarios.counterfactual.fused) << '\n';
    out << "reference fused:      " << vec(r.scenarios.reference.fused) << '\n';
    out << "TE:                   " << vec(r.effects.te) << "  label " << r.te_label << '\n';
    out << "NDE:                  " << vec(r.effects.nde) << '\n';
    out << "TIE:                  " << vec(r.effects.tie) << "  label " << r.tie_label << '\n';
  }
  return kExitOk;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return kExitIo;
    case ErrorKind::numerical:
    case ErrorKind::domain: return kExitNumerical;
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::shape:
    case ErrorKind::contract: return kExitValidation;
  }
  return kExitValidation;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual causal debiasing for toxic language detection", "ccdf"};
  app.require_subcommand(1);
  app.get_formatter()->column_width(34);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic lexically biased corpus");
  gen_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();
  gen_cmd->add_option("--spurious-rate", gen.spurious_rate,
                      "Rate at which the bias token co-occurs with toxic examples")
      ->capture_default_str()
      ->check(CLI::Range(0.5, 1.0));
  gen_cmd->add_option("--n-train", gen.n_train, "Training examples")->capture_default_str();
  gen_cmd->add_option("--n-test", gen.n_test, "Examples in valid and in each test split")
      ->capture_default_str();

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Toxic/non-toxic counts per lexicon token");
  stats_cmd->add_option("--data", stats.data, "Dataset (JSONL)")->required();
  stats_cmd->add_option("--lexicon", stats.lexicon, "Lexicon (surface,category CSV)")->required();

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a model and keep the best validation checkpoint");
  train_cmd->add_option("--config", tr.config, "key=value file; flags override it");
  train_cmd->add_option("--mode", tr.mode, "Training mode")
      ->capture_default_str()
      ->check(CLI::IsMember({"ccdf", "masking", "lmixin", "vanilla"}));
  train_cmd->add_option("--seed", tr.cfg.seed, "Initialisation, shuffle and dropout seed")
      ->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Run directory [runs/<timestamp>]");
  train_cmd->add_option("--data", tr.data, "Directory with train.jsonl, valid.jsonl, lexicon.csv");
  train_cmd->add_option("--train", tr.train, "Training set (JSONL)");
  train_cmd->add_option("--valid", tr.valid, "Validation set (JSONL)");
  train_cmd->add_option("--lexicon", tr.lexicon, "Lexicon (CSV)");
  train_cmd->add_option("--runs", tr.runs, "Independent runs with seeds seed, seed+1, ...")
      ->capture_default_str();
  train_cmd->add_option("--epochs", tr.cfg.epochs, "Epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.cfg.batch_size, "Examples per step")->capture_default_str();
  train_cmd->add_option("--lr", tr.cfg.learning_rate, "AdamW learning rate")->capture_default_str();
  train_cmd->add_option("--dropout", tr.cfg.dropout, "Dropout probability")->capture_default_str();
  train_cmd->add_option("--hidden", tr.cfg.hidden, "Hidden units of each branch MLP")
      ->capture_default_str();
  train_cmd->add_option("--max-len-x", tr.cfg.max_len_x, "Padded sentence length")
      ->capture_default_str();
  train_cmd->add_option("--max-len-b", tr.cfg.max_len_b, "Padded biased-token length")
      ->capture_default_str();
  train_cmd->add_option("--eval-every", tr.cfg.eval_every_steps, "Validation interval in steps")
      ->capture_default_str();
  train_cmd->add_option("--embed-dim", tr.cfg.embed_dim, "Embedding width")->capture_default_str();
  train_cmd->add_option("--weight-decay", tr.cfg.weight_decay, "AdamW decoupled weight decay")
      ->capture_default_str();
  train_cmd->add_option("--beta1", tr.cfg.beta1, "AdamW beta1")->capture_default_str();
  train_cmd->add_option("--beta2", tr.cfg.beta2, "AdamW beta2")->capture_default_str();
  train_cmd->add_option("--epsilon", tr.cfg.epsilon, "AdamW epsilon")->capture_default_str();
  train_cmd->add_option("--embed-init-scale", tr.cfg.embed_init_scale, "Embedding init std-dev")
      ->capture_default_str();
  train_cmd->add_option("--head-bias-init", tr.cfg.head_bias_init, "Initial branch output bias")
      ->capture_default_str();
  train_cmd->add_option("--head-out-scale", tr.cfg.head_out_scale,
                        "Scale of the branch output layer's initial weights")
      ->capture_default_str();
  train_cmd->add_option("--invariant-momentum", tr.cfg.invariant_momentum,
                        "Running-average decay for c_e and c_x")
      ->capture_default_str();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints; several give mean and s.d.");
  eval_cmd->add_option("--checkpoint", ev.checkpoints, "Checkpoint file(s)")->required();
  eval_cmd->add_option("--vocab", ev.vocab, "Vocabulary [vocab.txt beside the checkpoint]");
  eval_cmd->add_option("--data", ev.data, "Test set (JSONL)")->required();
  eval_cmd->add_option("--lexicon", ev.lexicon, "Lexicon (CSV)")->required();
  eval_cmd->add_option("--inference", ev.inference,
                       "tie, te, factual, or auto for the checkpoint mode's selection rule")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "tie", "te", "factual"}));
  eval_cmd->add_option("--ood-data", ev.ood_data, "Out-of-distribution set (JSONL)");
  eval_cmd->add_option("--predictions", ev.predictions, "Write per-example records (JSONL)");
  eval_cmd->add_option("--report", ev.report, "Write the report JSON here instead of stdout");

  InferArgs inf;
  auto* infer_cmd = app.add_subcommand("infer", "Debiased inference on single sentences");
  infer_cmd->add_option("--checkpoint", inf.checkpoint, "Checkpoint file")->required();
  infer_cmd->add_option("--vocab", inf.vocab, "Vocabulary [vocab.txt beside the checkpoint]");
  infer_cmd->add_option("--lexicon", inf.lexicon, "Lexicon (CSV)")->required();
  infer_cmd->add_option("--text", inf.texts, "Sentence(s)")->required();
  infer_cmd->add_flag("--json", inf.json_lines, "One JSON record per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen, out);
    if (stats_cmd->parsed()) return cmd_stats(stats, out);
    if (train_cmd->parsed()) {
      if (!tr.config.empty()) apply_config_file(*train_cmd, tr.config);
      return cmd_train(tr, train_cmd->config_to_str(true, false), out);
    }
    if (eval_cmd->parsed()) return cmd_eval(ev, out);
    if (infer_cmd->parsed()) return cmd_infer(inf, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitValidation;
}

}  // namespace ccdf::cli
