#pragma once

#include <stdexcept>
#include <string>

namespace smoothrace {

enum class ErrorKind {
  parameter,
  shape,
  numeric,
  state,
  config,
  file,
  compatibility,
};

/// Base exception for every failure raised by the library. The kind maps
/// one-to-one onto CLI exit codes (see exit_code()).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ParameterError : Error {
  explicit ParameterError(const std::string& w) : Error(ErrorKind::parameter, w) {}
};
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error(ErrorKind::shape, w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error(ErrorKind::numeric, w) {}
};
struct StateError : Error {
  explicit StateError(const std::string& w) : Error(ErrorKind::state, w) {}
};
struct ConfigError : Error {
  ConfigError(const std::string& key, const std::string& w)
      : Error(ErrorKind::config, key.empty() ? w : key + ": " + w), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};
struct FileError : Error {
  explicit FileError(const std::string& w) : Error(ErrorKind::file, w) {}
};
struct CompatibilityError : Error {
  explicit CompatibilityError(const std::string& w) : Error(ErrorKind::compatibility, w) {}
};

// 0 success, 1 usage/other, then one code per failure family.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::file: return 3;
    case ErrorKind::numeric: return 4;
    case ErrorKind::compatibility: return 5;
    case ErrorKind::parameter:
    case ErrorKind::shape:
    case ErrorKind::state: return 6;
  }
  return 1;
}

}  // namespace smoothrace
