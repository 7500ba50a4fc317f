#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gnar {

enum class ErrorKind {
  InvalidInput,
  DegenerateGeometry,
  DataIntegrity,
  ModelInadmissible,
  InsufficientData,
  SingularDesign,
  Infeasible,
  UndefinedStatistic,
  SelectionFailed,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (and the
/// CLI) can branch on the category without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace gnar
