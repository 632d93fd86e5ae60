#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace confsel {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: non-finite values, missing columns, malformed rows.
/// `field()` names the offending field or column.
class IngestionError : public Error {
 public:
  IngestionError(std::string field, const std::string& message)
      : Error(message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A caller broke a documented precondition (q outside (0,1), u outside
/// [0,1], length mismatch, incompatible method/threshold combination).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractError(message);
}

}  // namespace detail
}  // namespace confsel
