#pragma once

// UTF-8 word tokenization for caption scanning.
//
// A token is a maximal run of letters, digits and apostrophes (U+0027 or
// U+2019, both emitted as '). Code points outside ASCII count as letters
// unless they fall in a known punctuation, symbol or space block. Tokens are
// lowercased (ASCII, Latin-1, Latin Extended-A, Greek, Cyrillic).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vlaudit::text {

namespace detail {

/// Decodes one code point at s[i], advancing i. Returns nullopt on malformed
/// input (bad lead byte, truncated or overlong sequence, surrogate).
inline std::optional<char32_t> decode_one(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return std::nullopt;
  }
  if (i + len > s.size()) return std::nullopt;
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) return std::nullopt;
    cp = (cp << 6) | (b & 0x3F);
  }
  constexpr char32_t min_for_len[] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < min_for_len[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return std::nullopt;
  }
  i += len;
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == 0x2019; }

inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // C1 controls, Latin-1 punct
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, shapes
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE00 && cp <= 0xFE0F) return false;  // variation selectors
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp == 0xFEFF) return false;
  if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
      (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
    return false;  // fullwidth punctuation
  }
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
  return true;
}

inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x17F) {
    // Latin Extended-A pairs mostly alternate upper/lower; the 0x139-0x148 and
    // 0x179-0x17E runs are offset by one.
    const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (cp == 0x178) return 0xFF;
    if (cp == 0x130 || cp == 0x131 || cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
    if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
    return (cp % 2 == 0) ? cp + 1 : cp;
  }
  if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

}  // namespace detail

struct TokenizeOptions {
  /// Treat apostrophes as separators so "she's" yields "she" and "s".
  bool split_clitics = true;
  /// Return nullopt on malformed UTF-8 instead of treating bad bytes as
  /// separators.
  bool strict = false;
};

inline std::optional<std::vector<std::string>> tokenize(std::string_view s,
                                                        TokenizeOptions opts = {}) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    // Apostrophes never start or end a token.
    std::size_t b = 0;
    std::size_t e = current.size();
    while (b < e && current[b] == '\'') ++b;
    while (e > b && current[e - 1] == '\'') --e;
    if (e > b) tokens.emplace_back(current.substr(b, e - b));
    current.clear();
  };
  std::size_t i = 0;
  while (i < s.size()) {
    const auto cp = detail::decode_one(s, i);
    if (!cp) {
      if (opts.strict) return std::nullopt;
      ++i;
      flush();
      continue;
    }
    if (detail::is_apostrophe(*cp)) {
      if (opts.split_clitics) {
        flush();
      } else {
        current.push_back('\'');
      }
    } else if (detail::is_word_char(*cp)) {
      detail::append_utf8(current, detail::to_lower(*cp));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

/// Lowercases with the tokenizer's case mapping; malformed bytes pass through.
inline std::string lowercase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t start = i;
    const auto cp = detail::decode_one(s, i);
    if (!cp) {
      out.push_back(s[start]);
      i = start + 1;
      continue;
    }
    detail::append_utf8(out, detail::to_lower(*cp));
  }
  return out;
}

}  // namespace vlaudit::text
