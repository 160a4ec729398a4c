#ifndef TOSDA_ERROR_HPP
#define TOSDA_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace tosda {

enum class ErrorKind {
  invalid_parameter,
  geometry_inconsistency,
  unsupported_size,
  validation,
  parse,
  capacity_exceeded,
  internal_consistency,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::geometry_inconsistency: return "geometry-inconsistency";
    case ErrorKind::unsupported_size: return "unsupported-size";
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::capacity_exceeded: return "capacity-exceeded";
    case ErrorKind::internal_consistency: return "internal-consistency";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the kinds above so that
/// callers (and tests) can branch on the category instead of the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace tosda

#endif  // TOSDA_ERROR_HPP
