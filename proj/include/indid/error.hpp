#pragma once

#include <stdexcept>
#include <string>

namespace indid {

// Failure categories surfaced by the CLI as distinct exit codes.
// Plain precondition violations on the in-memory API use
// std::invalid_argument / std::out_of_range instead.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace indid
