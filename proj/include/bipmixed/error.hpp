#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bipmixed {

enum class ErrorKind {
  EmptyInput,
  CrossSiteFamily,
  ConstantColumn,
  DimensionMismatch,
  SingularSystem,
  EmptyModel,
  UnknownSite,
  BadDimension,
  LengthMismatch,
  UndefinedRate,
  ConfigError,
  IOError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so the
/// CLI can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Errors caused by bad input or configuration (as opposed to internal faults).
  bool is_user_error() const noexcept;

 private:
  ErrorKind kind_;
};

}  // namespace bipmixed
