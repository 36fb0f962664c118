#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include <absl/time/civil_time.h>
#include <absl/time/time.h>

#include "tripscope/error.hpp"

namespace tripscope {

/// UTC instant at millisecond resolution. Integral so that every timestamp
/// survives a format/parse cycle unchanged.
using Instant = std::chrono::sys_time<std::chrono::milliseconds>;
using Millis = std::chrono::milliseconds;

inline absl::Time to_absl(Instant t) { return absl::FromUnixMillis(t.time_since_epoch().count()); }
inline Instant from_absl(absl::Time t) { return Instant{Millis{absl::ToUnixMillis(t)}}; }

/// Accepts RFC 3339 / ISO-8601 with explicit offset ("Z" or "+hh:mm").
inline Instant parse_instant(std::string_view text) {
  absl::Time t;
  std::string err;
  if (!absl::ParseTime(absl::RFC3339_full, std::string(text), &t, &err)) {
    throw Error(ErrorKind::parse, "invalid timestamp '" + std::string(text) + "': " + err);
  }
  // Sub-millisecond digits are truncated toward the earlier instant.
  return Instant{Millis{absl::ToUnixMillis(t)}};
}

inline std::string format_instant(Instant t) {
  const absl::Time at = to_absl(t);
  const auto ms = t.time_since_epoch().count();
  const auto frac = ((ms % 1000) + 1000) % 1000;
  std::string out = absl::FormatTime("%Y-%m-%dT%H:%M:%S", at, absl::UTCTimeZone());
  if (frac != 0) {
    char buf[8];
    std::snprintf(buf, sizeof buf, ".%03d", static_cast<int>(frac));
    out += buf;
  }
  out += 'Z';
  return out;
}

inline absl::TimeZone load_zone(const std::string& name) {
  absl::TimeZone tz;
  if (!absl::LoadTimeZone(name, &tz)) {
    throw Error(ErrorKind::invalid_argument, "unknown time zone '" + name + "'");
  }
  return tz;
}

inline absl::CivilDay local_day(Instant t, const absl::TimeZone& tz) {
  return absl::ToCivilDay(to_absl(t), tz);
}

inline absl::CivilSecond local_second(Instant t, const absl::TimeZone& tz) {
  return absl::ToCivilSecond(to_absl(t), tz);
}

inline std::string format_day(absl::CivilDay d) { return absl::FormatCivilTime(d); }

inline absl::CivilDay parse_day(std::string_view text) {
  absl::CivilDay d;
  if (!absl::ParseCivilTime(absl::string_view(text.data(), text.size()), &d)) {
    throw Error(ErrorKind::parse, "invalid date '" + std::string(text) + "'");
  }
  return d;
}

inline Instant local_to_instant(absl::CivilSecond cs, const absl::TimeZone& tz) {
  return from_absl(absl::FromCivil(cs, tz));
}

inline double minutes_between(Instant a, Instant b) {
  return std::chrono::duration<double, std::ratio<60>>(b - a).count();
}

}  // namespace tripscope
