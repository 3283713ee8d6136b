#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "ccdf/causal.hpp"
#include "ccdf/checkpoint.hpp"
#include "ccdf/cli.hpp"
#include "ccdf/dataset.hpp"
#include "ccdf/error.hpp"
#include "ccdf/lexicon.hpp"
#include "ccdf/report.hpp"
#include "ccdf/train.hpp"

namespace py = pybind11;
using namespace py::literals;
using namespace ccdf;

namespace {

py::object from_json(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

std::vector<Example> to_examples(const std::vector<std::pair<std::string, int>>& rows) {
  std::vector<Example> out;
  out.reserve(rows.size());
  for (const auto& [text, label] : rows) out.push_back(make_example(text, label));
  return out;
}

std::vector<std::pair<std::string, int>> from_examples(const std::vector<Example>& xs) {
  std::vector<std::pair<std::string, int>> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.emplace_back(x.text, x.label);
  return out;
}

py::dict biased_dict(const BiasedTokenSet& b) {
  std::vector<std::string> cats, per_token;
  for (auto c : b.categories) cats.emplace_back(to_string(c));
  for (auto c : b.token_categories) per_token.emplace_back(to_string(c));
  return py::dict("tokens"_a = b.tokens, "token_categories"_a = per_token, "categories"_a = cats);
}

Lexicon lexicon_from(const std::vector<std::pair<std::string, std::string>>& entries) {
  Lexicon lex;
  for (const auto& [surface, cat] : entries) {
    const auto c = parse_category(cat);
    if (!c) throw ValidationError("unknown category '" + cat + "'");
    lex.add({surface, *c});
  }
  return lex;
}

struct PyResult {
  TrainResult result;
};

}  // namespace

PYBIND11_MODULE(_ccdf, m) {
  m.doc() = "Counterfactual causal debiasing for toxic language detection";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::io: PyErr_SetString(PyExc_OSError, e.what()); return;
        case ErrorKind::numerical:
        case ErrorKind::domain: PyErr_SetString(PyExc_ArithmeticError, e.what()); return;
        default: PyErr_SetString(PyExc_ValueError, e.what()); return;
      }
    }
  });

  m.def("fuse", py::overload_cast<const Scores&, const Scores&, const Scores&>(&fuse), "y_e"_a,
        "y_x"_a, "y_b"_a, "Harmonic fusion of three branch score pairs.");
  m.def("fuse2", py::overload_cast<const Scores&, const Scores&>(&fuse), "first"_a, "second"_a);
  m.def("argmax", &argmax, "scores"_a);
  m.def(
      "effects",
      [](const Scores& y_e, const Scores& y_x, const Scores& y_b, const Scores& c_e,
         const Scores& c_x, const Scores& y_b_ref, const std::string& variant) {
        const auto e = causal_effects(parse_variant(variant), make_factual(y_e, y_x, y_b),
                                      make_counterfactual(c_e, c_x, y_b),
                                      make_counterfactual(c_e, c_x, y_b_ref));
        return py::dict("te"_a = e.te, "nde"_a = e.nde, "tie"_a = e.tie);
      },
      "y_e"_a, "y_x"_a, "y_b"_a, "c_e"_a, "c_x"_a, "y_b_ref"_a, "variant"_a = "full",
      "TE, NDE and TIE from branch scores, invariant responses and the no-bias F_B output.");

  m.def("tokenize", [](const std::string& text) { return tokenize(text); }, "text"_a);

  py::class_<Lexicon>(m, "Lexicon")
      .def(py::init(&lexicon_from), "entries"_a = std::vector<std::pair<std::string, std::string>>{})
      .def_static("load", [](const std::filesystem::path& p) { return load_lexicon(p); }, "path"_a)
      .def("save", [](const Lexicon& l, const std::filesystem::path& p) { save_lexicon(p, l); }, "path"_a)
      .def("__len__", &Lexicon::size)
      .def("__contains__", &Lexicon::contains)
      .def("category",
           [](const Lexicon& l, const std::string& s) -> std::optional<std::string> {
             const auto c = l.find(s);
             if (!c) return std::nullopt;
             return std::string(to_string(*c));
           })
      .def("entries",
           [](const Lexicon& l) {
             std::vector<std::pair<std::string, std::string>> out;
             for (const auto& e : l.entries()) out.emplace_back(e.surface, to_string(e.category));
             return out;
           })
      .def("match", [](const Lexicon& l, const std::vector<std::string>& tokens) {
        return biased_dict(match_biased_tokens(tokens, l));
      }, "tokens"_a);

  m.def("load_jsonl", [](const std::filesystem::path& p) { return from_examples(load_jsonl(p)); },
        "path"_a);
  m.def(
      "generate_corpus",
      [](std::uint64_t seed, std::size_t n_train, std::size_t n_test, double rate) {
        const auto c = generate_synthetic_corpus(seed, n_train, n_test, rate);
        return py::dict("train"_a = from_examples(c.train), "valid"_a = from_examples(c.valid),
                        "test_iid"_a = from_examples(c.test_iid),
                        "test_flipped"_a = from_examples(c.test_flipped), "lexicon"_a = c.lexicon,
                        "bias_token"_a = c.bias_token);
      },
      "seed"_a, "n_train"_a = 4000, "n_test"_a = 1000, "spurious_rate"_a = 0.95);
  m.def(
      "token_toxic_ratio",
      [](const std::vector<std::pair<std::string, int>>& rows, const std::string& token) {
        const auto r = token_toxic_ratio(to_examples(rows), token);
        return py::make_tuple(r.toxic, r.nontoxic, r.ratio_percent);
      },
      "examples"_a, "token"_a);

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("dropout", &TrainConfig::dropout)
      .def_readwrite("hidden", &TrainConfig::hidden)
      .def_readwrite("max_len_x", &TrainConfig::max_len_x)
      .def_readwrite("max_len_b", &TrainConfig::max_len_b)
      .def_readwrite("eval_every_steps", &TrainConfig::eval_every_steps)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("embed_dim", &TrainConfig::embed_dim)
      .def_readwrite("weight_decay", &TrainConfig::weight_decay)
      .def_readwrite("beta1", &TrainConfig::beta1)
      .def_readwrite("beta2", &TrainConfig::beta2)
      .def_readwrite("epsilon", &TrainConfig::epsilon)
      .def_readwrite("embed_init_scale", &TrainConfig::embed_init_scale)
      .def_readwrite("head_bias_init", &TrainConfig::head_bias_init)
      .def_readwrite("head_out_scale", &TrainConfig::head_out_scale)
      .def_readwrite("invariant_momentum", &TrainConfig::invariant_momentum)
      .def_property(
          "mode", [](const TrainConfig& c) { return std::string(to_string(c.mode)); },
          [](TrainConfig& c, const std::string& m) { c.mode = parse_mode(m); });

  py::class_<TrainedModel>(m, "TrainedModel")
      .def_static(
          "load",
          [](const std::filesystem::path& checkpoint, const std::filesystem::path& vocab) {
            return from_checkpoint(read_checkpoint(checkpoint), Vocab::load(vocab));
          },
          "checkpoint"_a, "vocab"_a)
      .def(
          "save",
          [](const TrainedModel& t, const std::filesystem::path& checkpoint,
             const std::filesystem::path& vocab) {
            write_checkpoint(checkpoint, to_checkpoint(t));
            t.vocab.save(vocab);
          },
          "checkpoint"_a, "vocab"_a)
      .def_property_readonly("mode", [](const TrainedModel& t) { return std::string(to_string(t.mode)); })
      .def_property_readonly("vocab_size", [](const TrainedModel& t) { return t.vocab.size(); })
      .def(
          "infer",
          [](const TrainedModel& t, const std::string& text, const Lexicon& lex) {
            return from_json(to_json(infer(t, make_example(text, 0), lex)));
          },
          "text"_a, "lexicon"_a)
      .def(
          "predict",
          [](const TrainedModel& t, const std::vector<std::string>& texts, const Lexicon& lex,
             const std::string& inference) {
            std::vector<Example> xs;
            for (const auto& s : texts) xs.push_back(make_example(s, 0));
            return predict(t, xs, lex, parse_inference(inference));
          },
          "texts"_a, "lexicon"_a, "inference"_a = "tie")
      .def(
          "evaluate",
          [](const TrainedModel& t, const std::vector<std::pair<std::string, int>>& rows,
             const Lexicon& lex, const std::string& inference) {
            return from_json(to_json(evaluate(t, to_examples(rows), lex, parse_inference(inference))));
          },
          "examples"_a, "lexicon"_a, "inference"_a = "tie");

  py::class_<PyResult>(m, "TrainResult")
      .def_property_readonly("model", [](const PyResult& r) { return r.result.best; })
      .def_property_readonly("best_val_f1", [](const PyResult& r) { return r.result.best_val_f1; })
      .def_property_readonly("best_step", [](const PyResult& r) { return r.result.best_step; })
      .def_property_readonly("steps", [](const PyResult& r) { return r.result.steps; })
      .def_property_readonly("checkpoint_bytes",
                             [](const PyResult& r) { return py::bytes(r.result.best_checkpoint); })
      .def_property_readonly("loss_csv", [](const PyResult& r) { return loss_log_csv(r.result.log); });

  m.def(
      "train",
      [](const TrainConfig& config, const std::vector<std::pair<std::string, int>>& train_rows,
         const std::vector<std::pair<std::string, int>>& valid_rows, const Lexicon& lex) {
        const auto tr = to_examples(train_rows);
        const auto va = to_examples(valid_rows);
        py::gil_scoped_release release;
        return PyResult{train(config, tr, va, lex)};
      },
      "config"_a, "train"_a, "valid"_a, "lexicon"_a);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"ccdf"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      "args"_a, "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
