#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace geomort {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
  explicit DomainError(const std::string& msg) : Error(msg) {}
};

// Bad or missing run configuration.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Malformed input data; carries the 1-based row number when known.
class IngestError : public Error {
public:
  IngestError(long row, const std::string& msg)
      : Error("row " + std::to_string(row) + ": " + msg), row_(row) {}
  explicit IngestError(const std::string& msg) : Error(msg), row_(-1) {}
  long row() const { return row_; }

private:
  long row_;
};

// Non-finite value produced during numeric evaluation.
class NumericError : public Error {
public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Remote service refused the request (quota, bad key, forbidden).
class AuthError : public Error {
public:
  explicit AuthError(const std::string& msg) : Error(msg) {}
};

// Payload came back but is not decodable as the expected format.
class CorruptResponseError : public Error {
public:
  explicit CorruptResponseError(const std::string& msg) : Error(msg) {}
};

// Network-level failure after the given number of attempts.
class TransportError : public Error {
public:
  TransportError(int attempts, const std::string& msg)
      : Error(msg + " (after " + std::to_string(attempts) + " attempts)"),
        attempts_(attempts) {}
  int attempts() const { return attempts_; }

private:
  int attempts_;
};

// Design matrix is rank deficient; names the dependent columns.
class SingularDesignError : public Error {
public:
  SingularDesignError(std::vector<std::string> columns, const std::string& msg)
      : Error(msg), columns_(std::move(columns)) {}
  const std::vector<std::string>& columns() const { return columns_; }

private:
  std::vector<std::string> columns_;
};

}  // namespace geomort
