#include "bipmixed/error.hpp"

namespace bipmixed {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::CrossSiteFamily: return "CrossSiteFamily";
    case ErrorKind::ConstantColumn: return "ConstantColumn";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::EmptyModel: return "EmptyModel";
    case ErrorKind::UnknownSite: return "UnknownSite";
    case ErrorKind::BadDimension: return "BadDimension";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::UndefinedRate: return "UndefinedRate";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IOError: return "IOError";
  }
  return "Unknown";
}

bool Error::is_user_error() const noexcept {
  switch (kind_) {
    case ErrorKind::SingularSystem:
    case ErrorKind::EmptyModel:
      return false;
    default:
      return true;
  }
}

}  // namespace bipmixed
