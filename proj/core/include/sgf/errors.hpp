// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sgf {

/// Bad shapes, out-of-range arguments, empty inputs.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failure talking to an oracle (external handshake, malformed line, I/O).
class OracleProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested operation is not available for this object (e.g. gradients of
/// an external oracle).
class UnsupportedOperation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// (I - dF/dz) is singular or too ill-conditioned to invert.
class SingularField : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CorruptCheckpoint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Path deviation asked of a trace whose endpoints coincide.
class UndefinedDeviation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sgf
