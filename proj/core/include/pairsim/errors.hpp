#pragma once

#include <stdexcept>
#include <string>

namespace pairsim {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: ConfigError / ParseError / InvalidArgument / OutOfRange
// -> 2, FitError / ReconstructionError -> 3, IoError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad value passed to an operation (non-finite angle, weight outside [0,1], ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Argument outside a calibrated validity range (e.g. tuning-curve temperature).
class OutOfRange : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Object violates a structural invariant (e.g. density matrix not physical).
class InvalidState : public Error {
 public:
  using Error::Error;
};

// A fit rejected its input (insufficient span, no dip, degenerate data).
class FitError : public Error {
 public:
  using Error::Error;
};

// State reconstruction failed to converge; message carries diagnostics.
class ReconstructionError : public Error {
 public:
  using Error::Error;
};

// Configuration file problem; message names the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data file; message names the file position.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (open, write, rename).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pairsim
