#pragma once

#include <stdexcept>
#include <string>

namespace stonewalk {

// Error categories map onto CLI exit codes (see tools/):
//   ConfigError -> 2, NumericError -> 3, IoError -> 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Contract violations (caller bugs): misuse of an API, shape mismatches,
// stepping a finished episode. Distinct from user-facing config errors.
struct ContractError : std::logic_error {
  explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace stonewalk
