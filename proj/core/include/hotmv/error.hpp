#pragma once

#include <stdexcept>
#include <string>

namespace hotmv {

/// Base of all library errors. The category maps onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  enum class Kind { kUsage = 1, kData = 2, kNumerical = 3 };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Bad arguments, bad configuration, violated preconditions on shapes.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Kind::kUsage, what) {}
};

/// Malformed or inconsistent input files and datasets.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Kind::kData, what) {}
};

/// Non-finite values or solver breakdown.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(Kind::kNumerical, what) {}
};

}  // namespace hotmv
