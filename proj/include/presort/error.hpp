#pragma once

#include <stdexcept>
#include <string>

namespace presort {

/// Base for every failure raised by the library. Messages are meant for users.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line input; the CLI maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace presort
