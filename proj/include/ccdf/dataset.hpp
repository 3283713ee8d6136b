#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ccdf/lexicon.hpp"

namespace ccdf {

struct Example {
  std::string text;
  std::vector<std::string> tokens;
  int label = 0;  // 0 non-toxic, 1 toxic
};

// Lowercases, splits on whitespace and strips punctuation from both ends of
// each token. Interior characters (e.g. the '*' in "f*ck", the apostrophe in
// "don't") are kept. Tokens that are all punctuation vanish.
std::vector<std::string> tokenize(std::string_view text);

Example make_example(std::string text, int label);

std::vector<Example> parse_jsonl(std::istream& in, const std::string& source = "<jsonl>");
std::vector<Example> load_jsonl(const std::filesystem::path& path);
void save_jsonl(const std::filesystem::path& path, std::span<const Example> examples);

class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kSep = 2;
  static constexpr std::int32_t kNoBias = 3;
  static constexpr std::size_t kReserved = 4;

  Vocab();

  // Corpus tokens ordered by descending frequency, ties lexicographic;
  // lexicon surfaces missing from the corpus are appended after them.
  static Vocab build(std::span<const Example> examples, const Lexicon* lexicon = nullptr);
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::int32_t id(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

// Row-major padded id/mask matrices for a batch.
struct EncodedBatch {
  std::size_t batch = 0;
  std::size_t max_len_x = 0;
  std::size_t max_len_b = 0;
  std::vector<std::int32_t> x_ids;
  std::vector<std::int32_t> b_ids;
  std::vector<std::uint8_t> x_mask;
  std::vector<std::uint8_t> b_mask;
  std::vector<int> labels;

  std::span<const std::int32_t> x_row(std::size_t i) const {
    return std::span(x_ids).subspan(i * max_len_x, max_len_x);
  }
  std::span<const std::int32_t> b_row(std::size_t i) const {
    return std::span(b_ids).subspan(i * max_len_b, max_len_b);
  }
  std::span<const std::uint8_t> x_mask_row(std::size_t i) const {
    return std::span(x_mask).subspan(i * max_len_x, max_len_x);
  }
  std::span<const std::uint8_t> b_mask_row(std::size_t i) const {
    return std::span(b_mask).subspan(i * max_len_b, max_len_b);
  }
};

struct EncodeOptions {
  // Replace lexicon tokens in X with UNK (the masking baseline's training view).
  bool mask_biased_tokens = false;
};

inline constexpr std::size_t kDefaultMaxLenX = 128;
inline constexpr std::size_t kDefaultMaxLenB = 16;

// b_ids interleaves SEP between matched biased tokens: [b1, SEP, b2, ...];
// an empty match encodes as [NOBIAS]. A sentence with no tokens encodes as
// a single UNK.
EncodedBatch encode_batch(std::span<const Example> examples, const Lexicon& lexicon,
                          const Vocab& vocab, std::size_t max_len_x = kDefaultMaxLenX,
                          std::size_t max_len_b = kDefaultMaxLenB, EncodeOptions options = {});

struct SyntheticCorpus {
  std::vector<Example> train;
  std::vector<Example> valid;
  std::vector<Example> test_iid;
  std::vector<Example> test_flipped;
  Lexicon lexicon;
  std::string bias_token;
};

// Labels follow a hidden context pattern; `bias_token` appears in a fraction
// `spurious_rate` of toxic and (1 - spurious_rate) of non-toxic examples of
// train/valid/test_iid, with the rates swapped in test_flipped. valid and
// both test splits hold n_test examples each.
SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_train,
                                          std::size_t n_test, double spurious_rate);

struct TokenRatio {
  std::size_t toxic = 0;
  std::size_t nontoxic = 0;
  double ratio_percent = 0.0;
};

TokenRatio toxic_ratio_from_counts(std::size_t toxic, std::size_t nontoxic);
// Counts examples containing `token` (whole-token, case-insensitive), by label.
TokenRatio token_toxic_ratio(std::span<const Example> examples, std::string_view token);

}  // namespace ccdf
