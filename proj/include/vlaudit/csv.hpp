#pragma once

#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vlaudit/error.hpp"

namespace vlaudit::csv {

/// RFC 4180 record reader. Quoted fields may span lines; "" escapes a quote.
/// Line endings are LF or CRLF.
class Reader {
 public:
  using LineSource = std::function<bool(std::string&)>;

  explicit Reader(std::istream& in)
      : next_line_([&in](std::string& line) { return static_cast<bool>(std::getline(in, line)); }) {}
  explicit Reader(LineSource source) : next_line_(std::move(source)) {}

  /// Next record, or nullopt at end of input. An unterminated quote at EOF is a
  /// FormatError.
  std::optional<std::vector<std::string>> next() {
    std::string line;
    if (!next_line_(line)) return std::nullopt;
    ++line_;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (;;) {
      if (!quoted && !line.empty() && line.back() == '\r') line.pop_back();
      for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
          if (c == '"') {
            if (i + 1 < line.size() && line[i + 1] == '"') {
              field.push_back('"');
              ++i;
            } else {
              quoted = false;
            }
          } else {
            field.push_back(c);
          }
        } else if (c == '"' && field.empty() && !was_quoted) {
          quoted = true;
          was_quoted = true;
        } else if (c == ',') {
          fields.push_back(std::move(field));
          field.clear();
          was_quoted = false;
        } else {
          field.push_back(c);
        }
      }
      if (!quoted) break;
      if (!next_line_(line)) {
        throw FormatError("unterminated quoted field starting before line " +
                          std::to_string(line_));
      }
      ++line_;
      field.push_back('\n');
    }
    fields.push_back(std::move(field));
    return fields;
  }

  std::size_t line_number() const { return line_; }

 private:
  LineSource next_line_;
  std::size_t line_ = 0;
};

inline std::string escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.push_back(',');
    out += escape(fields[i]);
  }
  return out;
}

}  // namespace vlaudit::csv
