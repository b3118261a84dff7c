#pragma once

// Gendered-pronoun co-occurrence counts over caption corpora.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vlaudit/csv.hpp"
#include "vlaudit/error.hpp"
#include "vlaudit/parallel.hpp"
#include "vlaudit/taxonomy.hpp"
#include "vlaudit/text.hpp"

namespace vlaudit {

struct PronounLexicon {
  std::set<std::string> male;
  std::set<std::string> female;

  void validate() const {
    if (male.empty() || female.empty()) throw SchemaError("pronoun lexicon sets must be non-empty");
    for (const auto& t : male) {
      if (female.contains(t)) throw SchemaError("pronoun '" + t + "' is in both lexicon sets");
    }
    for (const auto* set : {&male, &female}) {
      for (const auto& t : *set) {
        if (t.empty() || text::lowercase(t) != t) {
          throw SchemaError("lexicon token '" + t + "' must be non-empty and lowercase");
        }
      }
    }
  }

  static PronounLexicon defaults() {
    return {{"he", "him", "his", "himself"}, {"she", "her", "hers", "herself"}};
  }

  static PronounLexicon from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("male") || !j.contains("female") ||
        !j["male"].is_array() || !j["female"].is_array()) {
      throw SchemaError("lexicon must be an object with 'male' and 'female' arrays");
    }
    PronounLexicon lex;
    try {
      for (const auto& t : j["male"]) lex.male.insert(t.get<std::string>());
      for (const auto& t : j["female"]) lex.female.insert(t.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(std::string("lexicon entries must be strings: ") + e.what());
    }
    lex.validate();
    return lex;
  }
};

enum class GenderAssignment { None, Male, Female, Mixed };

inline constexpr std::string_view to_string(GenderAssignment g) {
  switch (g) {
    case GenderAssignment::None: return "None";
    case GenderAssignment::Male: return "Male";
    case GenderAssignment::Female: return "Female";
    case GenderAssignment::Mixed: return "Mixed";
  }
  return "";
}

inline GenderAssignment assign_gender_tokens(std::span<const std::string> tokens,
                                             const PronounLexicon& lexicon) {
  std::size_t male = 0;
  std::size_t female = 0;
  for (const auto& t : tokens) {
    if (lexicon.male.contains(t)) {
      ++male;
    } else if (lexicon.female.contains(t)) {
      ++female;
    }
  }
  if (male == 0 && female == 0) return GenderAssignment::None;
  if (male > female) return GenderAssignment::Male;
  if (female > male) return GenderAssignment::Female;
  return GenderAssignment::Mixed;
}

/// Majority gender of the pronouns in `caption`; equal non-zero counts are
/// Mixed.
inline GenderAssignment assign_gender(std::string_view caption, const PronounLexicon& lexicon,
                                      bool split_clitics = true) {
  const auto tokens = text::tokenize(caption, {split_clitics, false});
  return assign_gender_tokens(*tokens, lexicon);
}

struct WordCounts {
  std::uint64_t male_count = 0;
  std::uint64_t female_count = 0;
  std::uint64_t mixed_count = 0;
  std::uint64_t total_matched = 0;

  WordCounts& operator+=(const WordCounts& o) {
    male_count += o.male_count;
    female_count += o.female_count;
    mixed_count += o.mixed_count;
    total_matched += o.total_matched;
    return *this;
  }

  friend bool operator==(const WordCounts&, const WordCounts&) = default;
};

struct CorpusStats {
  std::vector<std::string> words;  // scan order
  std::vector<WordCounts> counts;  // aligned with words
  std::uint64_t captions_scanned = 0;
  std::uint64_t skipped_lines = 0;

  const WordCounts& at(std::string_view word) const {
    for (std::size_t i = 0; i < words.size(); ++i)
      if (words[i] == word) return counts[i];
    throw DomainError("word '" + std::string(word) + "' was not scanned");
  }

  /// Counts are plain sums, so merging is associative and commutative.
  void merge(const CorpusStats& o) {
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    captions_scanned += o.captions_scanned;
    skipped_lines += o.skipped_lines;
  }

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

/// Token-sequence trie matching every word of interest in one pass per
/// caption.
class WordMatcher {
 public:
  WordMatcher(std::span<const std::string> words, bool split_clitics) {
    nodes_.emplace_back();
    for (std::size_t id = 0; id < words.size(); ++id) {
      const auto tokens = text::tokenize(words[id], {split_clitics, false});
      if (tokens->empty()) throw DomainError("word '" + words[id] + "' has no tokens");
      std::size_t node = 0;
      for (const auto& t : *tokens) {
        auto it = nodes_[node].children.find(t);
        if (it == nodes_[node].children.end()) {
          nodes_.emplace_back();
          it = nodes_[node].children.emplace(t, nodes_.size() - 1).first;
        }
        node = it->second;
      }
      nodes_[node].word_ids.push_back(id);
    }
  }

  /// Sorted, de-duplicated ids of every word occurring as a consecutive token
  /// run in `tokens`.
  std::vector<std::size_t> match(std::span<const std::string> tokens) const {
    std::vector<std::size_t> found;
    for (std::size_t start = 0; start < tokens.size(); ++start) {
      std::size_t node = 0;
      for (std::size_t i = start; i < tokens.size(); ++i) {
        const auto it = nodes_[node].children.find(tokens[i]);
        if (it == nodes_[node].children.end()) break;
        node = it->second;
        found.insert(found.end(), nodes_[node].word_ids.begin(), nodes_[node].word_ids.end());
      }
    }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    return found;
  }

 private:
  struct Node {
    std::unordered_map<std::string, std::size_t> children;
    std::vector<std::size_t> word_ids;
  };
  std::vector<Node> nodes_;
};

struct ScanOptions {
  bool split_clitics = true;
  std::size_t threads = 1;
  std::size_t chunk_size = 4096;  // captions per worker task
};

class CorpusScanner {
 public:
  CorpusScanner(std::vector<std::string> words, PronounLexicon lexicon, ScanOptions options = {})
      : words_(normalize_words(std::move(words))),
        lexicon_(std::move(lexicon)),
        options_(options),
        matcher_(words_, options.split_clitics) {
    lexicon_.validate();
    if (options_.chunk_size == 0) options_.chunk_size = 1;
  }

  const std::vector<std::string>& words() const { return words_; }

  CorpusStats empty_stats() const {
    CorpusStats s;
    s.words = words_;
    s.counts.assign(words_.size(), WordCounts{});
    return s;
  }

  /// Adds one caption (or one undecodable line) to `stats`.
  void add(std::string_view caption, CorpusStats& stats) const {
    const auto tokens = text::tokenize(caption, {options_.split_clitics, true});
    if (!tokens) {
      ++stats.skipped_lines;
      return;
    }
    ++stats.captions_scanned;
    const auto hits = matcher_.match(*tokens);
    if (hits.empty()) return;
    const auto gender = assign_gender_tokens(*tokens, lexicon_);
    if (gender == GenderAssignment::None) return;
    for (std::size_t id : hits) {
      auto& c = stats.counts[id];
      ++c.total_matched;
      switch (gender) {
        case GenderAssignment::Male: ++c.male_count; break;
        case GenderAssignment::Female: ++c.female_count; break;
        case GenderAssignment::Mixed: ++c.mixed_count; break;
        case GenderAssignment::None: break;
      }
    }
  }

  /// Scans `captions` in fixed-size chunks on private counters, then merges.
  void scan_into(std::span<const std::string> captions, CorpusStats& stats) const {
    const std::size_t chunks = (captions.size() + options_.chunk_size - 1) / options_.chunk_size;
    std::vector<CorpusStats> partial(chunks, empty_stats());
    parallel_for(chunks, options_.threads, [&](std::size_t c) {
      const std::size_t end = std::min(captions.size(), (c + 1) * options_.chunk_size);
      for (std::size_t i = c * options_.chunk_size; i < end; ++i) add(captions[i], partial[c]);
    });
    for (const auto& p : partial) stats.merge(p);
  }

  CorpusStats scan(std::span<const std::string> captions) const {
    auto stats = empty_stats();
    scan_into(captions, stats);
    return stats;
  }

  /// Pulls captions from `next` in batches (bounded memory) until it returns
  /// false.
  template <typename NextCaption>
  CorpusStats scan_source(NextCaption&& next) const {
    auto stats = empty_stats();
    const std::size_t batch = options_.chunk_size * resolve_threads(options_.threads) * 4;
    std::vector<std::string> buffer;
    buffer.reserve(batch);
    std::string caption;
    for (;;) {
      buffer.clear();
      while (buffer.size() < batch && next(caption)) buffer.push_back(std::move(caption));
      if (buffer.empty()) break;
      scan_into(buffer, stats);
      if (buffer.size() < batch) break;
    }
    return stats;
  }

 private:
  static std::vector<std::string> normalize_words(std::vector<std::string> words) {
    if (words.empty()) throw DomainError("word list is empty");
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (auto& w : words) {
      auto lower = text::lowercase(w);
      if (seen.insert(lower).second) out.push_back(std::move(lower));
    }
    return out;
  }

  std::vector<std::string> words_;
  PronounLexicon lexicon_;
  ScanOptions options_;
  WordMatcher matcher_;
};

inline CorpusStats scan(std::span<const std::string> corpus, std::vector<std::string> words,
                        const PronounLexicon& lexicon, ScanOptions options = {}) {
  return CorpusScanner(std::move(words), lexicon, options).scan(corpus);
}

// ---------------------------------------------------------------------------
// Proportions table

struct ProportionRow {
  std::string word;
  std::optional<double> male_pct;    // over male + female; Mixed excluded
  std::optional<double> female_pct;
  WordCounts counts;
};

inline std::vector<ProportionRow> proportions(const CorpusStats& stats) {
  std::vector<ProportionRow> rows;
  for (std::size_t i = 0; i < stats.words.size(); ++i) {
    const auto& c = stats.counts[i];
    ProportionRow row{stats.words[i], std::nullopt, std::nullopt, c};
    const auto denom = c.male_count + c.female_count;
    if (denom > 0) {
      row.male_pct = 100.0 * static_cast<double>(c.male_count) / static_cast<double>(denom);
      row.female_pct = 100.0 * static_cast<double>(c.female_count) / static_cast<double>(denom);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// One decimal place.
inline std::string format_percent(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", pct);
  return buf;
}

/// 1000 * part / denom rounded half-to-even in integer arithmetic. For any
/// split, tenths(a, a + b) + tenths(b, a + b) == 1000.
inline std::uint64_t percent_tenths(std::uint64_t part, std::uint64_t denom) {
  const std::uint64_t scaled = part * 1000;
  std::uint64_t q = scaled / denom;
  const std::uint64_t r = scaled % denom;
  if (2 * r > denom || (2 * r == denom && q % 2 == 1)) ++q;
  return q;
}

/// Displayed percentage of `part` within `denom`, e.g. "27.9".
inline std::string display_percent(std::uint64_t part, std::uint64_t denom) {
  const auto t = percent_tenths(part, denom);
  return std::to_string(t / 10) + "." + std::to_string(t % 10);
}

inline std::string proportions_to_csv(std::span<const ProportionRow> rows) {
  std::ostringstream out;
  out << "word,male_pct,female_pct,male_count,female_count,mixed_count,total_matched\n";
  for (const auto& r : rows) {
    const auto denom = r.counts.male_count + r.counts.female_count;
    out << csv::join({r.word, denom ? display_percent(r.counts.male_count, denom) : "",
                      denom ? display_percent(r.counts.female_count, denom) : "",
                      std::to_string(r.counts.male_count), std::to_string(r.counts.female_count),
                      std::to_string(r.counts.mixed_count),
                      std::to_string(r.counts.total_matched)})
        << '\n';
  }
  return out.str();
}

inline nlohmann::ordered_json to_json(const CorpusStats& stats) {
  nlohmann::ordered_json per_word = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < stats.words.size(); ++i) {
    const auto& c = stats.counts[i];
    per_word[stats.words[i]] = {{"male_count", c.male_count},
                                {"female_count", c.female_count},
                                {"mixed_count", c.mixed_count},
                                {"total_matched", c.total_matched}};
  }
  return {{"captions_scanned", stats.captions_scanned},
          {"skipped_lines", stats.skipped_lines},
          {"per_word", std::move(per_word)}};
}

// ---------------------------------------------------------------------------
// Corpus containers: newline-delimited text or CSV, optionally gzip-compressed
// (detected by the 0x1F 0x8B magic).

/// Line reader over a plain or gzip file. Gzip corruption or truncation is a
/// FormatError.
class LineFile {
 public:
  explicit LineFile(const std::filesystem::path& path) : path_(path.string()) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw IoError("cannot open corpus '" + path_ + "'");
    std::array<unsigned char, 2> magic{};
    probe.read(reinterpret_cast<char*>(magic.data()), 2);
    gzip_ = probe.gcount() == 2 && magic[0] == 0x1F && magic[1] == 0x8B;
    probe.close();
    if (gzip_) {
      gz_ = gzopen(path_.c_str(), "rb");
      if (gz_ == nullptr) throw IoError("cannot open gzip corpus '" + path_ + "'");
      gzbuffer(gz_, 1 << 17);
    } else {
      plain_.open(path, std::ios::binary);
      if (!plain_) throw IoError("cannot open corpus '" + path_ + "'");
    }
  }

  LineFile(const LineFile&) = delete;
  LineFile& operator=(const LineFile&) = delete;
  ~LineFile() {
    if (gz_ != nullptr) gzclose(gz_);
  }

  bool is_gzip() const { return gzip_; }

  /// Next line without its terminator (LF or CRLF).
  bool next(std::string& line) {
    line.clear();
    for (;;) {
      if (pos_ == buf_.size() && !fill()) {
        if (line.empty() && !partial_) return false;
        partial_ = false;
        strip_cr(line);
        return true;
      }
      const auto nl = buf_.find('\n', pos_);
      if (nl == std::string::npos) {
        line.append(buf_, pos_);
        pos_ = buf_.size();
        partial_ = true;
        continue;
      }
      line.append(buf_, pos_, nl - pos_);
      pos_ = nl + 1;
      partial_ = false;
      strip_cr(line);
      return true;
    }
  }

 private:
  static void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }

  bool fill() {
    buf_.resize(1 << 16);
    pos_ = 0;
    std::size_t got = 0;
    if (gzip_) {
      const int n = gzread(gz_, buf_.data(), static_cast<unsigned>(buf_.size()));
      int errnum = Z_OK;
      const char* msg = gzerror(gz_, &errnum);
      if (n < 0 || (errnum != Z_OK && errnum != Z_STREAM_END)) {
        throw FormatError("corrupt gzip stream in '" + path_ + "': " + (msg ? msg : "unknown"));
      }
      got = static_cast<std::size_t>(n);
    } else {
      plain_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
      if (plain_.bad()) throw IoError("read failure on '" + path_ + "'");
      got = static_cast<std::size_t>(plain_.gcount());
    }
    buf_.resize(got);
    return got > 0;
  }

  std::string path_;
  bool gzip_ = false;
  gzFile gz_ = nullptr;
  std::ifstream plain_;
  std::string buf_;
  std::size_t pos_ = 0;
  bool partial_ = false;
};

enum class CorpusFormat { Lines, Csv };

struct CorpusSource {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::Lines;
  std::string caption_column = "caption";
};

/// Scans each source in order and merges the results. CSV rows whose field
/// count differs from the header are counted as skipped lines.
inline CorpusStats scan_files(std::span<const CorpusSource> sources, const CorpusScanner& scanner) {
  auto total = scanner.empty_stats();
  for (const auto& src : sources) {
    try {
      LineFile file(src.path);
      if (src.format == CorpusFormat::Lines) {
        total.merge(scanner.scan_source([&](std::string& out) { return file.next(out); }));
        continue;
      }
      csv::Reader reader([&](std::string& out) { return file.next(out); });
      const auto header = reader.next();
      if (!header) continue;  // empty file
      auto col = std::find(header->begin(), header->end(), src.caption_column);
      if (col == header->end() && !header->empty() &&
          header->front() == "\xEF\xBB\xBF" + src.caption_column) {
        col = header->begin();
      }
      if (col == header->end()) {
        throw FormatError("CSV header lacks caption column '" + src.caption_column + "'");
      }
      const auto column = static_cast<std::size_t>(col - header->begin());
      const auto width = header->size();
      std::uint64_t bad_rows = 0;
      auto stats = scanner.scan_source([&](std::string& out) {
        while (auto row = reader.next()) {
          if (row->size() != width) {
            ++bad_rows;
            continue;
          }
          out = std::move((*row)[column]);
          return true;
        }
        return false;
      });
      stats.skipped_lines += bad_rows;
      total.merge(stats);
    } catch (Error& e) {
      e.add_context(src.path.string());
      throw;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Inputs for the scan command

inline PronounLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open lexicon '" + path.string() + "'");
  try {
    return PronounLexicon::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("lexicon '" + path.string() + "' is not valid JSON: " + e.what());
  }
}

/// Words of interest: taxonomy JSON (optionally restricted to `category`) or
/// plain text with one word per line. Blank lines and '#' comments are
/// ignored.
inline std::vector<std::string> load_words(const std::filesystem::path& path,
                                           const std::optional<std::string>& category = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open words file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  const auto first = content.find_first_not_of(" \t\r\n");
  std::vector<std::string> words;
  if (first != std::string::npos && content[first] == '[') {
    std::optional<Category> wanted;
    if (category) {
      wanted = parse_category(*category);
      if (!wanted) throw SchemaError("unknown category '" + *category + "'");
    }
    for (const auto& cat : parse_taxonomy(std::string_view(content))) {
      if (wanted && cat.name != *wanted) continue;
      for (const auto& w : cat.words) words.push_back(w.text);
    }
  } else {
    if (category) throw SchemaError("--category requires a taxonomy JSON words file");
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
      const auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      const auto e = line.find_last_not_of(" \t\r");
      words.push_back(line.substr(b, e - b + 1));
    }
  }
  if (words.empty()) throw SchemaError("no words found in '" + path.string() + "'");
  return words;
}

}  // namespace vlaudit
