// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace groklab {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller passed a value outside an operation's domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input is structurally valid but carries no usable information
/// (empty dataset, all-zero weights, constant sequence, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// A forward or backward pass produced a non-finite value.
class NumericOverflow : public Error {
 public:
  explicit NumericOverflow(const std::string& what, long epoch = -1)
      : Error(epoch >= 0 ? what + " (epoch " + std::to_string(epoch) + ")" : what), epoch_(epoch) {}

  long epoch() const noexcept { return epoch_; }

 private:
  long epoch_;
};

/// Config or checkpoint document failed schema validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace groklab
