#include "ccdf/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "ccdf/error.hpp"

namespace ccdf {
namespace {

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; });
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::nOI: return "nOI";
    case Category::OI: return "OI";
    case Category::OnI: return "OnI";
  }
  return "?";
}

std::optional<Category> parse_category(std::string_view text) {
  if (text == "nOI") return Category::nOI;
  if (text == "OI") return Category::OI;
  if (text == "OnI") return Category::OnI;
  return std::nullopt;
}

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void Lexicon::add(const LexiconEntry& entry) {
  if (entry.surface.empty()) throw ValidationError("lexicon surface is empty");
  if (has_space(entry.surface)) {
    throw ValidationError("lexicon surface '" + entry.surface + "' contains whitespace");
  }
  if (ascii_lower(entry.surface) != entry.surface) {
    throw ValidationError("lexicon surface '" + entry.surface + "' is not lowercase");
  }
  auto [it, inserted] = entries_.emplace(entry.surface, entry.category);
  if (!inserted && it->second != entry.category) {
    throw ValidationError("lexicon surface '" + entry.surface + "' listed as both " +
                          std::string(to_string(it->second)) + " and " +
                          std::string(to_string(entry.category)));
  }
}

std::optional<Category> Lexicon::find(std::string_view surface) const {
  auto it = entries_.find(surface);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<LexiconEntry> Lexicon::entries() const {
  std::vector<LexiconEntry> out;
  out.reserve(entries_.size());
  for (const auto& [surface, category] : entries_) out.push_back({surface, category});
  return out;
}

Lexicon parse_lexicon(std::istream& in, const std::string& source) {
  Lexicon lexicon;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) {
      throw ParseError(where + "expected 'surface,category', got '" + std::string(line) + "'");
    }
    const auto surface = trim(line.substr(0, comma));
    const auto category_text = trim(line.substr(comma + 1));
    if (surface.empty() || has_space(surface) || category_text.find(',') != std::string_view::npos) {
      throw ParseError(where + "malformed entry '" + std::string(line) + "'");
    }
    const auto category = parse_category(category_text);
    if (!category) {
      throw ValidationError(where + "unknown category '" + std::string(category_text) +
                            "' (expected nOI, OI or OnI)");
    }
    try {
      lexicon.add({ascii_lower(surface), *category});
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon '" + path.string() + "'");
  return parse_lexicon(in, path.string());
}

void save_lexicon(const std::filesystem::path& path, const Lexicon& lexicon) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "# surface,category\n";
  for (const auto& e : lexicon.entries()) out << e.surface << ',' << to_string(e.category) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

BiasedTokenSet match_biased_tokens(std::span<const std::string> tokens, const Lexicon& lexicon) {
  BiasedTokenSet out;
  if (lexicon.empty()) return out;
  for (const auto& token : tokens) {
    auto lowered = ascii_lower(token);
    if (auto category = lexicon.find(lowered)) {
      out.tokens.push_back(std::move(lowered));
      out.token_categories.push_back(*category);
      out.categories.insert(*category);
    }
  }
  return out;
}

}  // namespace ccdf
