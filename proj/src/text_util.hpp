#pragma once

// Small parsing/formatting helpers shared by the CSV and plan readers.

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "tasep/error.hpp"

namespace tasep::text {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::vector<std::string_view> lines(std::string_view s) {
  std::vector<std::string_view> out;
  for (std::string_view line : split(s, '\n')) {
    line = trim(line);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

template <typename T>
T parse_number(std::string_view s, std::string_view what) {
  s = trim(s);
  T value{};
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto r = std::from_chars(b, e, value);
  if (s.empty() || r.ec != std::errc{} || r.ptr != e) {
    throw Error(Errc::parse_error, "cannot parse " + std::string(what) + " from '" +
                                       std::string(s) + "'");
  }
  return value;
}

inline std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest text that reads back to the same double.
inline std::string shortest(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

}  // namespace tasep::text
