#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "ccdf/error.hpp"
#include "ccdf/lexicon.hpp"
#include "support.hpp"

using namespace ccdf;

namespace {

Lexicon parse(const std::string& text) {
  std::istringstream in(text);
  return parse_lexicon(in, "lex.csv");
}

// O(n * |L|) scan over entries.
std::vector<std::string> brute_force(const std::vector<std::string>& tokens, const Lexicon& lex) {
  std::vector<std::string> out;
  const auto entries = lex.entries();
  for (const auto& t : tokens) {
    std::string lower;
    for (char c : t) lower += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    for (const auto& e : entries)
      if (e.surface == lower) out.push_back(lower);
  }
  return out;
}

}  // namespace

TEST_CASE("a single nOI line loads one entry") {
  testing::TempDir dir;
  {
    std::ofstream(dir / "lex.csv") << "gay,nOI\n";
  }
  const auto lex = load_lexicon(dir / "lex.csv");
  CHECK(lex.size() == 1);
  CHECK(lex.find("gay") == Category::nOI);
}

TEST_CASE("an empty lexicon is valid and never matches") {
  const auto lex = parse("");
  CHECK(lex.empty());
  const std::vector<std::string> tokens{"anything", "at", "all"};
  CHECK(match_biased_tokens(tokens, lex).empty());
}

TEST_CASE("interior punctuation survives in surfaces") {
  const auto lex = parse("f*ck,OnI\n");
  const auto entries = lex.entries();
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].surface == "f*ck");
  CHECK(entries[0].category == Category::OnI);
}

TEST_CASE("comments, blank lines and surrounding spaces are ignored") {
  const auto lex = parse("# header\n\n  black , nOI \nhoe,OnI\n");
  CHECK(lex.size() == 2);
  CHECK(lex.find("black") == Category::nOI);
}

TEST_CASE("upper-case surfaces in the file are stored lowercased") {
  CHECK(parse("Black,nOI\n").find("black") == Category::nOI);
}

TEST_CASE("malformed lines are parse errors naming the line") {
  try {
    parse("gay,nOI\n\njust-a-word\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("lex.csv:3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("a,b,c\n"), ParseError);
  CHECK_THROWS_AS(parse(",nOI\n"), ParseError);
}

TEST_CASE("unknown categories are validation errors") {
  try {
    parse("gay,nOI\nslur,XYZ\n");
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("lex.csv:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("x,noi\n"), ValidationError);
}

TEST_CASE("conflicting duplicates are rejected, identical ones are not") {
  CHECK_THROWS_AS(parse("ass,OnI\nass,OI\n"), ValidationError);
  CHECK(parse("ass,OnI\nass,OnI\n").size() == 1);
}

TEST_CASE("missing lexicon files are I/O errors") {
  testing::TempDir dir;
  CHECK_THROWS_AS(load_lexicon(dir / "none.csv"), IoError);
}

TEST_CASE("lexicons round-trip through files") {
  testing::TempDir dir;
  const auto lex = parse("hoe,OnI\ngay,nOI\nn*gga,OI\n");
  save_lexicon(dir / "out.csv", lex);
  const auto back = load_lexicon(dir / "out.csv");
  REQUIRE(back.size() == 3);
  CHECK(back.find("n*gga") == Category::OI);
  CHECK(back.find("gay") == Category::nOI);
}

TEST_CASE("matching picks biased tokens in sentence order") {
  const auto lex = parse("hoe,OnI\nass,OnI\n");
  const std::vector<std::string> tokens{"my", "ex", "so", "ugly", "...", "hoe", "ass"};
  const auto b = match_biased_tokens(tokens, lex);
  CHECK(b.tokens == std::vector<std::string>{"hoe", "ass"});
  CHECK(b.categories == std::set<Category>{Category::OnI});
  CHECK(b.has(Category::OnI));
  CHECK_FALSE(b.has(Category::nOI));
}

TEST_CASE("no match gives an empty set") {
  const auto lex = parse("hoe,OnI\n");
  const std::vector<std::string> tokens{"hello", "world"};
  const auto b = match_biased_tokens(tokens, lex);
  CHECK(b.empty());
  CHECK(b.categories.empty());
}

TEST_CASE("matching is case-insensitive and keeps duplicates") {
  const auto lex = parse("black,nOI\n");
  const std::vector<std::string> tokens{"Black", "BLACK"};
  const auto b = match_biased_tokens(tokens, lex);
  CHECK(b.tokens == std::vector<std::string>{"black", "black"});
  CHECK(b.token_categories == std::vector<Category>{Category::nOI, Category::nOI});
}

TEST_CASE("whole-token matching only") {
  const auto lex = parse("ass,OnI\n");
  const std::vector<std::string> tokens{"class", "passage", "assess"};
  CHECK(match_biased_tokens(tokens, lex).empty());
}

TEST_CASE("matching agrees with a brute-force scan on random corpora") {
  const std::vector<std::string> pool{"a", "b", "c", "d", "e", "f", "g", "h", "A", "B", "F*", "f*"};
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::uniform_int_distribution<int> cat(0, 2);
  std::uniform_int_distribution<int> len(0, 12);
  for (int trial = 0; trial < 500; ++trial) {
    Lexicon lex;
    for (int k = 0, n = len(rng) / 2; k < n; ++k) {
      std::string s = ascii_lower(pool[pick(rng)]);
      if (!lex.contains(s)) lex.add({s, kAllCategories[cat(rng)]});
    }
    std::vector<std::string> tokens;
    for (int k = 0, n = len(rng); k < n; ++k) tokens.push_back(pool[pick(rng)]);

    const auto b = match_biased_tokens(tokens, lex);
    CHECK(b.tokens == brute_force(tokens, lex));
    for (std::size_t k = 0; k < b.tokens.size(); ++k) {
      REQUIRE(lex.contains(b.tokens[k]));
      CHECK(lex.find(b.tokens[k]) == b.token_categories[k]);
      CHECK(b.has(b.token_categories[k]));
    }

    Lexicon doubled = lex;
    for (const auto& e : lex.entries()) doubled.add(e);
    const auto again = match_biased_tokens(tokens, doubled);
    CHECK(again.tokens == b.tokens);
    CHECK(again.categories == b.categories);
  }
}

TEST_CASE("category names round-trip") {
  for (auto c : kAllCategories) CHECK(parse_category(to_string(c)) == c);
  CHECK_FALSE(parse_category("NOI").has_value());
}
