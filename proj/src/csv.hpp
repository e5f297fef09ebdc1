#pragma once

// Minimal comma-separated reader shared by the panel, target and covariate
// loaders. Not a public header.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "clubconv/error.hpp"

namespace clubconv::csv {

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // Next data record; skips blank and '#' comment lines.
  bool next(std::vector<std::string>& fields) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      if (line_ == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
      const std::string t = trim(raw);
      if (t.empty() || t.front() == '#') continue;
      split(t, fields);
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }

 private:
  void split(const std::string& s, std::vector<std::string>& fields) const {
    fields.clear();
    std::string cur;
    bool quoted = false;
    for (char c : s) {
      if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        fields.push_back(trim(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (quoted) throw Error(ErrorKind::MalformedInput, "line " + std::to_string(line_) + ": unbalanced quote");
    fields.push_back(trim(cur));
  }

  std::istream& in_;
  std::size_t line_ = 0;
};

inline int parse_int(const std::string& s, std::size_t line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::MalformedInput, "line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  }
  return v;
}

inline bool is_missing(const std::string& s) { return s.empty() || s == "NA" || s == ":"; }

// Empty, NA and ':' are missing markers; anything else must be a number.
inline std::optional<double> parse_cell(const std::string& s, std::size_t line) {
  if (is_missing(s)) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::MalformedInput, "line " + std::to_string(line) + ": cannot parse '" + s + "'");
  }
  return v;
}

inline std::string format_shortest(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline std::string format_sig(double v, int digits) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.*g", digits, v);
  return std::string(buf.data());
}

}  // namespace clubconv::csv
