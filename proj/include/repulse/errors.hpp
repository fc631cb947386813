#pragma once

#include <stdexcept>
#include <string>

namespace repulse {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two particles occupy the same point; forces and the potential are undefined.
struct DegenerateConfigurationError : Error {
  using Error::Error;
};

// A quantity that divides by t was requested at t <= 0.
struct UndefinedAtTimeError : Error {
  using Error::Error;
};

// The request makes no sense for this state (e.g. pairwise minimum with n < 2).
struct NotApplicableError : Error {
  using Error::Error;
};

// A step produced non-finite values.
struct NumericalBlowupError : Error {
  using Error::Error;
};

// Step control drove the step size below the configured minimum.
struct StiffnessError : Error {
  using Error::Error;
};

// A windowed diagnostic was evaluated at a time before the window opens (t < 1).
struct DiagnosticWindowError : Error {
  using Error::Error;
};

// The trajectory is too short for the requested extraction.
struct InsufficientHorizonError : Error {
  using Error::Error;
};

// Least-squares fit cannot be performed (rank-deficient design, too few samples).
struct FitError : Error {
  using Error::Error;
};

// Fit input outside the model's domain (nonpositive values under a log, ...).
struct FitDomainError : Error {
  using Error::Error;
};

// Scenario parameters cannot be satisfied (rejection sampling gave up).
struct InfeasibleSpecError : Error {
  using Error::Error;
};

// Configuration file or flag validation failure.
struct ConfigError : Error {
  using Error::Error;
};

// Malformed CSV input; message names the offending row and column.
struct CsvParseError : Error {
  using Error::Error;
};

// Filesystem failure while reading or writing outputs.
struct IoError : Error {
  using Error::Error;
};

}  // namespace repulse
