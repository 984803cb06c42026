#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "owaic/errors.hpp"

namespace owaic::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Full-token parse; accepts "inf", "-inf", "nan" spellings as strtod does.
inline std::optional<double> parse_double(std::string_view token) {
  if (token.empty()) return std::nullopt;
  std::string buf(token);
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> parse_integer(std::string_view token) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) return std::nullopt;
  return v;
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Parses "<magic> <version> key=value key=value ..." headers.
struct Header {
  std::string magic;
  std::string version;
  std::map<std::string, std::string, std::less<>> fields;

  const std::string& at(std::string_view key, std::size_t line) const {
    auto it = fields.find(key);
    if (it == fields.end()) throw FormatError("header is missing " + std::string(key) + "=", line);
    return it->second;
  }
};

inline Header parse_header(std::string_view text, std::size_t line) {
  Header h;
  std::size_t i = 0;
  for (std::string_view tok : split(trim(text), ' ')) {
    if (tok.empty()) continue;
    if (i == 0) {
      h.magic = tok;
    } else if (i == 1) {
      h.version = tok;
    } else {
      const auto eq = tok.find('=');
      if (eq == std::string_view::npos) {
        throw FormatError("header token '" + std::string(tok) + "' is not key=value", line);
      }
      h.fields.emplace(std::string(tok.substr(0, eq)), std::string(tok.substr(eq + 1)));
    }
    ++i;
  }
  return h;
}

}  // namespace owaic::detail
