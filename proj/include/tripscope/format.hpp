#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>

#include "tripscope/error.hpp"

namespace tripscope {

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// Fixed-point text with `digits` decimals.
inline std::string format_fixed(double v, int digits) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::parse, "invalid " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s, std::string_view what) {
  long long v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw Error(ErrorKind::parse, "invalid " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

}  // namespace tripscope
