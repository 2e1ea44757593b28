#pragma once

#include <stdexcept>
#include <string>

namespace tas {

// Precondition violated by the caller (bad shapes, bad labels, bad options).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A loss, energy or parameter became NaN/inf.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The transcript cannot be placed into the available frames.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Autoregressive prefix grew past the configured cap.
class DecodeOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File missing, unreadable or malformed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tas
