#ifndef RISKMAPS_ERROR_HPP
#define RISKMAPS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace riskmaps {

/// Raised for invalid input and violated preconditions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed scenario, map and configuration documents.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace riskmaps

#endif  // RISKMAPS_ERROR_HPP
