#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tripscope {

enum class ErrorKind {
  io,
  parse,
  referential,
  geometry,
  unknown_segment,
  unknown_gate,
  mixed_station,
  conflict,
  invalid_argument,
  no_overlap,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io_error";
    case ErrorKind::parse: return "parse_error";
    case ErrorKind::referential: return "referential_error";
    case ErrorKind::geometry: return "geometry_error";
    case ErrorKind::unknown_segment: return "unknown_segment";
    case ErrorKind::unknown_gate: return "unknown_gate";
    case ErrorKind::mixed_station: return "mixed_station";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::no_overlap: return "no_overlap";
  }
  return "error";
}

/// Every failure raised by the library carries a machine-readable kind so the
/// CLI can map it to an exit code and the service to a status + error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace tripscope
