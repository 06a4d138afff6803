#pragma once

// Comma-delimited text with a mandatory header row. Quoted fields follow
// RFC 4180 within a single physical line; embedded newlines are not
// supported by the interchange formats this library reads.

#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "hoa/core_model.hpp"

namespace hoa::csv {

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw Error(Errc::SchemaViolation, "unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << quote(fields[i]);
  }
  os << '\n';
}

inline std::string strip_eol(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

/// One data row with its 1-based physical line number and raw text.
struct Row {
  std::size_t line = 0;
  std::string raw;
  std::vector<std::string> fields;
};

/// Header-indexed reader. Column lookup is case-insensitive.
class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw Error(Errc::IoError, "cannot open '" + path + "'");
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      line = strip_eol(std::move(line));
      if (detail::trim(line).empty()) continue;
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      header_ = split_line(line);
      for (std::size_t i = 0; i < header_.size(); ++i)
        index_[detail::to_lower(detail::trim(header_[i]))] = i;
      has_header_ = true;
      break;
    }
  }

  /// False for an empty file.
  bool has_header() const { return has_header_; }
  const std::string& path() const { return path_; }

  std::size_t column(std::string_view name) const {
    auto it = index_.find(detail::to_lower(name));
    if (it == index_.end())
      throw Error(Errc::MissingColumn, "'" + std::string(name) + "' in " + path_);
    return it->second;
  }

  bool has_column(std::string_view name) const { return index_.count(detail::to_lower(name)) > 0; }

  /// Skips blank lines. Rows whose quoting is broken come back with an
  /// empty field vector so callers can log them.
  bool next(Row& row) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      line = strip_eol(std::move(line));
      if (detail::trim(line).empty()) continue;
      row.line = line_no_;
      row.raw = line;
      try {
        row.fields = split_line(line);
      } catch (const Error&) {
        row.fields.clear();
      }
      return true;
    }
    return false;
  }

  /// Field accessor that tolerates short rows.
  static std::string_view field(const Row& row, std::size_t col) {
    return col < row.fields.size() ? detail::trim(row.fields[col]) : std::string_view{};
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::map<std::string, std::size_t> index_;
  std::size_t line_no_ = 0;
  bool has_header_ = false;
};

inline std::string join(const std::vector<std::string>& parts, char sep = '|') {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep = '|') {
  std::vector<std::string> out;
  if (detail::trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    auto part = detail::trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (!part.empty()) out.emplace_back(part);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace hoa::csv
