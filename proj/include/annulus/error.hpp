// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace annulus {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: parameter out of its domain. The CLI maps this to exit code 2.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Argument within the guard radius of a pole.
class PoleError : public Error {
 public:
  using Error::Error;
};

/// Series hit its term cap before the tail bound was met.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// A numerical scheme left its admissible range (e.g. PDE step rejection).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace annulus
