#pragma once

#include <stdexcept>
#include <string>

namespace hetgain {

// Exit codes used by the command-line front end.
enum class ErrorKind { Config = 2, SizeGuard = 3, Domain = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

/// Malformed input: bad config keys, mismatched dimensions, unknown names.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// An enumeration or lattice would exceed its size guard.
class SizeGuardError : public Error {
 public:
  explicit SizeGuardError(const std::string& what) : Error(ErrorKind::SizeGuard, what) {}
};

/// A parameter or input lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

}  // namespace hetgain
