#pragma once

#include <stdexcept>
#include <string>

namespace maskshare {

// Error taxonomy used across the library:
//   DimensionError — shape/index mismatch between caller data and a contract.
//   NumericError   — non-finite values where finite math is required.
//   ContractError  — API misuse (stale trace, dangling id, bad action).
//   ConfigError    — invalid configuration value (threshold, K, learning rate).
class DimensionError : public std::runtime_error {
 public:
  explicit DimensionError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace maskshare
