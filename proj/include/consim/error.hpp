#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace consim {

enum class ErrorKind {
  invalid_size,
  invalid_graph,
  invalid_parameter,
  unknown_name,
  unsupported,
  unregistered_kind,
  precondition,
  length_mismatch,
  non_termination,
  insufficient_points,
  config,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_size: return "invalid-size";
    case ErrorKind::invalid_graph: return "invalid-graph";
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::unknown_name: return "unknown-name";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::unregistered_kind: return "unregistered-kind";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::length_mismatch: return "length-mismatch";
    case ErrorKind::non_termination: return "non-termination";
    case ErrorKind::insufficient_points: return "insufficient-points";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace consim
