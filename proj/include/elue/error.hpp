#pragma once

#include <stdexcept>
#include <string>

namespace elue {

// Base of every error raised by the library. The message carries enough
// context (module, layer, task id) to locate the failure without a debugger.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Not enough data to perform the requested sampling or training.
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or incompatible file contents (checkpoints, task lists).
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace elue
