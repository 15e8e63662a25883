#pragma once

#include <stdexcept>
#include <string>

namespace huc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shape/length mismatches (non-triangular svec length, frobenius dims, ...).
struct DimensionError : Error {
  using Error::Error;
};

// Matrix indefinite beyond tolerance where PSD input is required.
struct NotPsdError : Error {
  using Error::Error;
};

// Numerical breakdown with diagnostics (factorization failure etc.).
struct NumericalError : Error {
  using Error::Error;
};

// Argument outside its documented domain.
struct OutOfRangeError : Error {
  using Error::Error;
};

// File syntax problems; message carries file/line/field.
struct ParseError : Error {
  using Error::Error;
};

// A structural instance invariant is violated; message names it.
struct ValidationError : Error {
  using Error::Error;
};

// Solver ended in a state the caller cannot use (with status tag).
struct SolverError : Error {
  using Error::Error;
};

// No candidate configuration can carry the aggregated dispatch at some (t,h).
struct InfeasibleRoundingError : Error {
  InfeasibleRoundingError(int t, int h, const std::string& msg)
      : Error(msg), hour(t), plant(h) {}
  int hour;
  int plant;
};

// Stage-tagged failure surfaced by the pipeline.
struct StageError : Error {
  StageError(const std::string& stage_, const std::string& msg)
      : Error("[" + stage_ + "] " + msg), stage(stage_) {}
  std::string stage;
};

}  // namespace huc
