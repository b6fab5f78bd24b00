#pragma once

#include <stdexcept>
#include <string>

namespace hopsim {

// Base class for all domain errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The body never left the surface within the simulated horizon.
struct NoSeparationError : Error {
  using Error::Error;
};

// Motor-gain bisection could not bracket the reference hop speed.
struct NoConvergenceError : Error {
  using Error::Error;
};

// Fewer samples than a fit or estimate requires.
struct InsufficientSamplesError : Error {
  using Error::Error;
};

// Track timestamps are not strictly increasing.
struct NonmonotonicTimeError : Error {
  using Error::Error;
};

// Marker geometry cannot pin down a pose (coincident or too few points).
struct DegenerateConfigurationError : Error {
  using Error::Error;
};

// Sun observations too close in direction to resolve attitude.
struct ParallelObservationsError : Error {
  using Error::Error;
};

// Daylight fraction of 0 or 1 leaves longitude (and latitude) undefined.
struct PolarDegenerateError : Error {
  using Error::Error;
};

// Activity id missing from the power load table.
struct UnknownActivityError : Error {
  using Error::Error;
};

// Too few sun detectors lit to infer a direction.
struct InsufficientIlluminationError : Error {
  using Error::Error;
};

// Config file problem; `key` names the offending entry.
struct ConfigError : Error {
  std::string key;
  ConfigError(const std::string& key_, const std::string& what_)
      : Error(what_), key(key_) {}
};

// Malformed CSV or scenario line; `line` is 1-based.
struct ParseError : Error {
  int line;
  ParseError(int line_, const std::string& what_) : Error(what_), line(line_) {}
};

}  // namespace hopsim
