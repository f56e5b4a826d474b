#pragma once

#include <stdexcept>
#include <string>

namespace capstore {

// Malformed or inconsistent input (files, arguments, specs).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A workload does not fit the organization it is mapped onto.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A sector group saw an event that is illegal in its current state.
class ProtocolViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Replay mode asked for a calibration anchor that does not exist.
class MissingAnchorError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace capstore
