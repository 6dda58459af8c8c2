// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace esgnn {

// Error taxonomy shared by the library and the CLI. The CLI maps these onto
// process exit codes: usage -> 2, data -> 3, divergence -> 4.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UsageError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

// Malformed input file; carries the 1-based line number when known.
class ParseError : public DataError {
public:
  ParseError(const std::string& msg, long line = -1)
      : DataError(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg), line_(line) {}
  long line() const { return line_; }

private:
  long line_;
};

class ShapeError : public DataError {
public:
  using DataError::DataError;
};

class TransportError : public Error {
public:
  using Error::Error;
};

// Cross-rank parameter or state mismatch detected at runtime.
class DivergenceError : public Error {
public:
  using Error::Error;
};

}  // namespace esgnn
