#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "vlaudit/bundled_taxonomy_data.hpp"
#include "vlaudit/error.hpp"

namespace vlaudit {

enum class WordKind { Adjective, Noun, Activity, Object };

enum class Category {
  Appearance,
  Behavioral,
  EducationWealth,
  CriminalJustice,
  Healthcare,
  PortrayalInMedia,
  Political,
  Religion,
  Occupation,
  Stereotyping,
};

inline constexpr std::array<Category, 10> kAllCategories = {
    Category::Appearance,       Category::Behavioral, Category::EducationWealth,
    Category::CriminalJustice,  Category::Healthcare, Category::PortrayalInMedia,
    Category::Political,        Category::Religion,   Category::Occupation,
    Category::Stereotyping};

inline constexpr std::array<WordKind, 4> kAllWordKinds = {WordKind::Adjective, WordKind::Noun,
                                                          WordKind::Activity, WordKind::Object};

inline constexpr std::string_view to_string(Category c) {
  constexpr std::array<std::string_view, 10> names = {
      "Appearance", "Behavioral", "EducationWealth",  "CriminalJustice", "Healthcare",
      "PortrayalInMedia", "Political", "Religion", "Occupation", "Stereotyping"};
  return names[static_cast<std::size_t>(c)];
}

inline constexpr std::string_view to_string(WordKind k) {
  constexpr std::array<std::string_view, 4> names = {"Adjective", "Noun", "Activity", "Object"};
  return names[static_cast<std::size_t>(k)];
}

inline std::optional<Category> parse_category(std::string_view s) {
  for (Category c : kAllCategories)
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline std::optional<WordKind> parse_word_kind(std::string_view s) {
  for (WordKind k : kAllWordKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

struct TaxonomyWord {
  std::string text;
  WordKind kind = WordKind::Adjective;

  friend bool operator==(const TaxonomyWord&, const TaxonomyWord&) = default;
};

struct TaxonomyCategory {
  Category name = Category::Appearance;
  std::vector<TaxonomyWord> words;

  friend bool operator==(const TaxonomyCategory&, const TaxonomyCategory&) = default;
};

using Taxonomy = std::vector<TaxonomyCategory>;

struct Caption {
  std::string text;
  TaxonomyWord source_word;
  Category category = Category::Appearance;

  friend bool operator==(const Caption&, const Caption&) = default;
};

inline Taxonomy taxonomy_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw SchemaError("taxonomy must be a JSON array of categories");
  Taxonomy out;
  std::unordered_set<std::string> seen_categories;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("category") || !entry.contains("words") ||
        !entry["category"].is_string() || !entry["words"].is_array()) {
      throw SchemaError("each taxonomy entry needs a string 'category' and a 'words' array");
    }
    const auto name = entry["category"].get<std::string>();
    const auto category = parse_category(name);
    if (!category) throw SchemaError("unknown category '" + name + "'");
    if (!seen_categories.insert(name).second) throw SchemaError("category '" + name + "' repeated");

    TaxonomyCategory cat{*category, {}};
    std::unordered_set<std::string> seen_words;
    for (const auto& w : entry["words"]) {
      if (!w.is_object() || !w.contains("text") || !w.contains("kind") || !w["text"].is_string() ||
          !w["kind"].is_string()) {
        throw SchemaError("word entries in '" + name + "' need string 'text' and 'kind'");
      }
      auto text = w["text"].get<std::string>();
      if (text.empty()) throw SchemaError("empty word in '" + name + "'");
      const auto kind_name = w["kind"].get<std::string>();
      const auto kind = parse_word_kind(kind_name);
      if (!kind) throw SchemaError("unknown kind '" + kind_name + "' for word '" + text + "'");
      if (!seen_words.insert(text).second) {
        throw SchemaError("duplicate word '" + text + "' in category '" + name + "'");
      }
      cat.words.push_back({std::move(text), *kind});
    }
    if (cat.words.empty()) throw SchemaError("category '" + name + "' has no words");
    out.push_back(std::move(cat));
  }
  return out;
}

inline Taxonomy parse_taxonomy(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("taxonomy is not valid JSON: ") + e.what());
  }
  return taxonomy_from_json(doc);
}

inline Taxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open taxonomy '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_taxonomy(std::string_view(ss.str()));
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

/// The taxonomy shipped with the library (data/taxonomy.json).
inline const Taxonomy& default_taxonomy() {
  static const Taxonomy taxonomy = parse_taxonomy(kBundledTaxonomyJson);
  return taxonomy;
}

inline nlohmann::json taxonomy_to_json(const Taxonomy& taxonomy) {
  auto doc = nlohmann::json::array();
  for (const auto& cat : taxonomy) {
    auto words = nlohmann::json::array();
    for (const auto& w : cat.words) {
      words.push_back({{"text", w.text}, {"kind", std::string(to_string(w.kind))}});
    }
    doc.push_back({{"category", std::string(to_string(cat.name))}, {"words", std::move(words)}});
  }
  return doc;
}

inline std::size_t word_count(const Taxonomy& taxonomy) {
  std::size_t n = 0;
  for (const auto& c : taxonomy) n += c.words.size();
  return n;
}

// ---------------------------------------------------------------------------
// Caption rendering

namespace detail {

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline std::string_view first_token(std::string_view s) {
  const auto end = s.find_first_of(" -");
  return end == std::string_view::npos ? s : s.substr(0, end);
}

}  // namespace detail

/// "a" or "an" for `word`: vowel-initial words take "an" except
/// user/unicorn/european/one; hour/honest/heir/mba take "an" despite their
/// spelling. The exception lists match the word's first token.
inline std::string_view indefinite_article(std::string_view word) {
  static const std::unordered_set<std::string> vowel_but_a = {"user", "unicorn", "european",
                                                              "one"};
  static const std::unordered_set<std::string> consonant_but_an = {"hour", "honest", "heir", "mba"};
  const std::string head = detail::lower_ascii(detail::first_token(word));
  if (head.empty()) return "a";
  if (consonant_but_an.contains(head)) return "an";
  if (vowel_but_a.contains(head)) return "a";
  switch (head.front()) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return "an";
    default: return "a";
  }
}

inline Caption render_caption(const TaxonomyWord& word, Category category = Category::Appearance) {
  std::string text = "a photo of ";
  switch (word.kind) {
    case WordKind::Adjective:
      text += std::string(indefinite_article(word.text)) + " " + word.text + " person";
      break;
    case WordKind::Noun:
    case WordKind::Object:
      text += std::string(indefinite_article(word.text)) + " " + word.text;
      break;
    case WordKind::Activity:
      text += "a person who is " + word.text;
      break;
  }
  return Caption{std::move(text), word, category};
}

/// Every word's caption, in taxonomy order.
inline std::vector<Caption> render_all(const Taxonomy& taxonomy) {
  std::vector<Caption> out;
  for (const auto& cat : taxonomy)
    for (const auto& w : cat.words) out.push_back(render_caption(w, cat.name));
  return out;
}

}  // namespace vlaudit
