#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccdf {

// Lexicon categories: non-offensive identity mention, offensive identity
// mention, offensive non-identity term (swears, insults).
enum class Category { nOI, OI, OnI };

inline constexpr Category kAllCategories[] = {Category::nOI, Category::OI, Category::OnI};

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view text);

struct LexiconEntry {
  std::string surface;
  Category category;
};

// Immutable after loading; lookups are safe from any number of threads.
class Lexicon {
 public:
  Lexicon() = default;

  // Throws ValidationError on an empty/whitespace/uppercase surface or on a
  // conflicting re-definition. Re-adding an identical entry is a no-op.
  void add(const LexiconEntry& entry);

  std::optional<Category> find(std::string_view surface) const;
  bool contains(std::string_view surface) const { return find(surface).has_value(); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Entries in lexicographic surface order.
  std::vector<LexiconEntry> entries() const;

 private:
  std::map<std::string, Category, std::less<>> entries_;
};

// `surface,category` per line; blank lines and lines starting with '#' are
// skipped. `source` names the input in error messages.
Lexicon parse_lexicon(std::istream& in, const std::string& source = "<lexicon>");
Lexicon load_lexicon(const std::filesystem::path& path);
void save_lexicon(const std::filesystem::path& path, const Lexicon& lexicon);

struct BiasedTokenSet {
  std::vector<std::string> tokens;          // sentence order, duplicates kept
  std::vector<Category> token_categories;  // parallel to tokens
  std::set<Category> categories;

  bool empty() const { return tokens.empty(); }
  bool has(Category c) const { return categories.count(c) != 0; }
};

// Whole-token, case-insensitive lookup of every token.
BiasedTokenSet match_biased_tokens(std::span<const std::string> tokens, const Lexicon& lexicon);

std::string ascii_lower(std::string_view text);

}  // namespace ccdf
