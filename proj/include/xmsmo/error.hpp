#ifndef XMSMO_ERROR_HPP
#define XMSMO_ERROR_HPP

#include <stdexcept>
#include <string>

namespace xmsmo {

enum class ErrorKind {
  InvalidArgument,
  EmptyInput,
  Io,
  Format,
  Config,
  Capacity,
  Validation,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Format: return "format-error";
    case ErrorKind::Config: return "config-error";
    case ErrorKind::Capacity: return "capacity-error";
    case ErrorKind::Validation: return "validation-error";
  }
  return "error";
}

/// Every library failure is reported as an Error carrying its kind, so
/// callers can map kinds to exit codes or record fields.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace xmsmo

#endif  // XMSMO_ERROR_HPP
