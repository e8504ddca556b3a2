#pragma once

#include <stdexcept>
#include <string>

namespace stss {

// Violated operation preconditions: shape mismatches, bad arguments.
class ContractError : public std::invalid_argument {
public:
  explicit ContractError(const std::string& what) : std::invalid_argument(what) {}
};

class ConfigError : public std::invalid_argument {
public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// NaN/Inf produced or consumed by a numeric kernel.
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

class InsufficientHistoryError : public ContractError {
public:
  explicit InsufficientHistoryError(const std::string& what) : ContractError(what) {}
};

} // namespace stss
