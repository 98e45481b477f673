#pragma once

#include <stdexcept>
#include <string>

namespace segpoison {

// Base class for every error the toolkit raises. Callers that only need to
// distinguish I/O failures from bad input can catch IoError and Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration: duplicate mapping source, mismatched target mask...
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A class id outside [0, K) where one is required.
class RangeError : public Error {
 public:
  using Error::Error;
};

// Trigger geometry that does not fit the image.
class PlacementError : public Error {
 public:
  using Error::Error;
};

// Not enough eligible samples for the requested poisoning subset.
class SelectionError : public Error {
 public:
  using Error::Error;
};

// Misaligned or malformed inputs (dimension mismatch, list length mismatch).
class InputError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Filesystem or codec failure.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace segpoison
