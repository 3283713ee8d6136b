#include "ccdf/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "ccdf/error.hpp"

namespace ccdf {
namespace {

// Multi-byte punctuation that commonly wraps tokens in scraped text.
constexpr std::array<std::string_view, 10> kUtf8Punct = {
    "\xE2\x80\x98", "\xE2\x80\x99", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\xA6",
    "\xE2\x80\x93", "\xE2\x80\x94", "\xC2\xAB",     "\xC2\xBB",     "\xC2\xBF"};

std::size_t leading_punct(std::string_view s) {
  if (s.empty()) return 0;
  if (std::ispunct(static_cast<unsigned char>(s.front()))) return 1;
  for (auto p : kUtf8Punct)
    if (s.starts_with(p)) return p.size();
  return 0;
}

std::size_t trailing_punct(std::string_view s) {
  if (s.empty()) return 0;
  if (std::ispunct(static_cast<unsigned char>(s.back()))) return 1;
  for (auto p : kUtf8Punct)
    if (s.ends_with(p)) return p.size();
  return 0;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::string_view word = text.substr(i, j - i);
    i = j;
    while (auto n = leading_punct(word)) word.remove_prefix(n);
    while (auto n = trailing_punct(word)) word.remove_suffix(n);
    if (!word.empty()) tokens.push_back(ascii_lower(word));
  }
  return tokens;
}

Example make_example(std::string text, int label) {
  if (label != 0 && label != 1) {
    throw ValidationError("label must be 0 or 1, got " + std::to_string(label));
  }
  Example ex;
  ex.tokens = tokenize(text);
  ex.text = std::move(text);
  ex.label = label;
  return ex;
}

std::vector<Example> parse_jsonl(std::istream& in, const std::string& source) {
  std::vector<Example> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), is_space)) continue;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(where + "invalid JSON (" + e.what() + ")");
    }
    if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
      throw ParseError(where + "expected an object with string field 'text'");
    }
    if (!record.contains("label") || !record["label"].is_number_integer()) {
      throw ParseError(where + "expected integer field 'label'");
    }
    const auto label = record["label"].get<long long>();
    if (label != 0 && label != 1) {
      throw ValidationError(where + "label must be 0 or 1, got " + std::to_string(label));
    }
    out.push_back(make_example(record["text"].get<std::string>(), static_cast<int>(label)));
  }
  return out;
}

std::vector<Example> load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path.string() + "'");
  return parse_jsonl(in, path.string());
}

void save_jsonl(const std::filesystem::path& path, std::span<const Example> examples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& ex : examples) {
    out << nlohmann::json{{"text", ex.text}, {"label", ex.label}}.dump() << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// ---------------------------------------------------------------------------

Vocab::Vocab() {
  push("[PAD]");
  push("[UNK]");
  push("[SEP]");
  push("[NOBIAS]");
}

void Vocab::push(std::string token) {
  index_.emplace(token, static_cast<std::int32_t>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocab Vocab::build(std::span<const Example> examples, const Lexicon* lexicon) {
  std::map<std::string, std::size_t> counts;
  for (const auto& ex : examples)
    for (const auto& t : ex.tokens) ++counts[t];
  std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab vocab;
  for (auto& [token, count] : ordered)
    if (!vocab.contains(token)) vocab.push(token);
  if (lexicon) {
    for (const auto& e : lexicon->entries())
      if (!vocab.contains(e.surface)) vocab.push(e.surface);
  }
  return vocab;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary '" + path.string() + "'");
  Vocab fresh;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  for (std::size_t i = 0; i < kReserved; ++i) {
    if (i >= lines.size() || lines[i] != fresh.tokens_[i]) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) + ": expected reserved token " +
                       fresh.tokens_[i]);
    }
  }
  Vocab vocab;
  for (std::size_t i = kReserved; i < lines.size(); ++i) {
    if (lines[i].empty() || vocab.contains(lines[i])) {
      throw ParseError(path.string() + ":" + std::to_string(i + 1) +
                       ": empty or duplicate vocabulary entry");
    }
    vocab.push(lines[i]);
  }
  return vocab;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  for (const auto& t : tokens_) out << t << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::int32_t Vocab::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ValidationError("token id " + std::to_string(id) + " outside vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

EncodedBatch encode_batch(std::span<const Example> examples, const Lexicon& lexicon,
                          const Vocab& vocab, std::size_t max_len_x, std::size_t max_len_b,
                          EncodeOptions options) {
  if (max_len_x == 0 || max_len_b == 0) {
    throw ValidationError("padded lengths must be at least 1");
  }
  EncodedBatch batch;
  batch.batch = examples.size();
  batch.max_len_x = max_len_x;
  batch.max_len_b = max_len_b;
  batch.x_ids.assign(examples.size() * max_len_x, Vocab::kPad);
  batch.b_ids.assign(examples.size() * max_len_b, Vocab::kPad);
  batch.x_mask.assign(examples.size() * max_len_x, 0);
  batch.b_mask.assign(examples.size() * max_len_b, 0);
  batch.labels.reserve(examples.size());

  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    batch.labels.push_back(ex.label);

    const std::size_t nx = std::min(ex.tokens.size(), max_len_x);
    for (std::size_t j = 0; j < nx; ++j) {
      const auto& tok = ex.tokens[j];
      const bool masked = options.mask_biased_tokens && lexicon.contains(ascii_lower(tok));
      batch.x_ids[i * max_len_x + j] = masked ? Vocab::kUnk : vocab.id(tok);
      batch.x_mask[i * max_len_x + j] = 1;
    }
    if (nx == 0) {  // empty sentence: a lone UNK keeps the input well-formed
      batch.x_ids[i * max_len_x] = Vocab::kUnk;
      batch.x_mask[i * max_len_x] = 1;
    }

    const auto biased = match_biased_tokens(ex.tokens, lexicon);
    std::vector<std::int32_t> b;
    if (biased.empty()) {
      b.push_back(Vocab::kNoBias);
    } else {
      for (std::size_t k = 0; k < biased.tokens.size(); ++k) {
        if (k) b.push_back(Vocab::kSep);
        b.push_back(vocab.id(biased.tokens[k]));
      }
    }
    const std::size_t nb = std::min(b.size(), max_len_b);
    for (std::size_t j = 0; j < nb; ++j) {
      batch.b_ids[i * max_len_b + j] = b[j];
      batch.b_mask[i * max_len_b + j] = 1;
    }
  }
  return batch;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 60> kFiller = {
    "the",    "a",      "today",  "we",     "went",    "to",     "park",   "weather", "is",
    "nice",   "movie",  "was",    "long",   "my",      "friend", "said",   "that",    "people",
    "from",   "town",   "like",   "music",  "food",    "game",   "last",   "night",   "really",
    "think",  "about",  "this",   "new",    "phone",   "work",   "coffee", "morning", "street",
    "saw",    "big",    "dog",    "school", "book",    "read",   "city",   "bus",     "late",
    "again",  "watch",  "show",   "house",  "family",  "dinner", "green",  "river",   "walk",
    "team",   "won",    "match",  "happy",  "weekend", "they"};

constexpr std::array<std::string_view, 4> kToxicContext = {"idiot", "stupid", "trash", "moron"};

constexpr std::string_view kBiasToken = "zorbian";
constexpr std::string_view kDecoyIdentity = "krell";   // OI, label-independent
constexpr std::string_view kDecoyOffensive = "frak";   // OnI, label-independent
constexpr double kDecoyRate = 0.15;

template <typename T, std::size_t N>
std::string_view pick(std::mt19937_64& rng, const std::array<T, N>& pool) {
  return pool[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

std::vector<Example> make_split(std::uint64_t seed, std::uint64_t split, std::size_t n,
                                double bias_given_toxic, double bias_given_nontoxic) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(split)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Exact label balance and exact per-class bias counts, then shuffled.
  const std::size_t n_toxic = n / 2;
  const std::size_t n_clean = n - n_toxic;
  const auto with_bias = [](std::size_t count, double rate) {
    return static_cast<std::size_t>(std::llround(rate * static_cast<double>(count)));
  };
  std::vector<std::pair<int, bool>> plan;
  plan.reserve(n);
  const std::size_t toxic_biased = with_bias(n_toxic, bias_given_toxic);
  const std::size_t clean_biased = with_bias(n_clean, bias_given_nontoxic);
  for (std::size_t i = 0; i < n_toxic; ++i) plan.emplace_back(1, i < toxic_biased);
  for (std::size_t i = 0; i < n_clean; ++i) plan.emplace_back(0, i < clean_biased);
  std::shuffle(plan.begin(), plan.end(), rng);

  std::vector<Example> out;
  out.reserve(n);
  for (const auto& [label, biased] : plan) {
    std::vector<std::string_view> words;
    const auto filler = std::uniform_int_distribution<int>(4, 9)(rng);
    for (int k = 0; k < filler; ++k) words.push_back(pick(rng, kFiller));
    if (label == 1) {
      const auto context = std::uniform_int_distribution<int>(2, 3)(rng);
      for (int k = 0; k < context; ++k) words.push_back(pick(rng, kToxicContext));
    }
    if (biased) words.push_back(kBiasToken);
    if (unit(rng) < kDecoyRate) words.push_back(kDecoyIdentity);
    if (unit(rng) < kDecoyRate) words.push_back(kDecoyOffensive);
    std::shuffle(words.begin(), words.end(), rng);

    std::string text;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k) text += ' ';
      text += words[k];
    }
    if (unit(rng) < 0.5) {
      text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
      text += '.';
    }
    out.push_back(make_example(std::move(text), label));
  }
  return out;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_train,
                                          std::size_t n_test, double spurious_rate) {
  if (!(spurious_rate >= 0.5 && spurious_rate <= 1.0)) {
    throw ValidationError("spurious rate must lie in [0.5, 1.0], got " +
                          std::to_string(spurious_rate));
  }
  const double r = spurious_rate;
  SyntheticCorpus corpus;
  corpus.train = make_split(seed, 0, n_train, r, 1.0 - r);
  corpus.valid = make_split(seed, 1, n_test, r, 1.0 - r);
  corpus.test_iid = make_split(seed, 2, n_test, r, 1.0 - r);
  corpus.test_flipped = make_split(seed, 3, n_test, 1.0 - r, r);
  corpus.lexicon.add({std::string(kBiasToken), Category::nOI});
  corpus.lexicon.add({std::string(kDecoyIdentity), Category::OI});
  corpus.lexicon.add({std::string(kDecoyOffensive), Category::OnI});
  corpus.bias_token = std::string(kBiasToken);
  return corpus;
}

TokenRatio toxic_ratio_from_counts(std::size_t toxic, std::size_t nontoxic) {
  if (toxic + nontoxic == 0) throw ValidationError("token has no occurrences");
  TokenRatio r;
  r.toxic = toxic;
  r.nontoxic = nontoxic;
  r.ratio_percent = 100.0 * static_cast<double>(toxic) / static_cast<double>(toxic + nontoxic);
  return r;
}

TokenRatio token_toxic_ratio(std::span<const Example> examples, std::string_view token) {
  const auto needle = ascii_lower(token);
  std::size_t toxic = 0, nontoxic = 0;
  for (const auto& ex : examples) {
    const bool present = std::any_of(ex.tokens.begin(), ex.tokens.end(),
                                     [&](const std::string& t) { return ascii_lower(t) == needle; });
    if (!present) continue;
    (ex.label == 1 ? toxic : nontoxic) += 1;
  }
  if (toxic + nontoxic == 0) {
    throw ValidationError("token '" + needle + "' has no occurrences");
  }
  return toxic_ratio_from_counts(toxic, nontoxic);
}

}  // namespace ccdf
