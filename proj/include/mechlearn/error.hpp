#pragma once

#include <stdexcept>
#include <string>

namespace mechlearn {

// Base for every error raised by the library. The CLI maps the concrete
// type onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

// Simulation-side failures.
class SimulationError : public Error {
 public:
  using Error::Error;
};

class DegenerateScore : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

class StepSizeError : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

class TooLarge : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

class ErgodicityError : public SimulationError {
 public:
  using SimulationError::SimulationError;
};

}  // namespace mechlearn
