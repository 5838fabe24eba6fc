#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace finslab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Expression syntax error; offset is a byte position into the source text.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t offset)
      : Error(msg + " at offset " + std::to_string(offset)), offset(offset) {}
  std::size_t offset;
};

struct ConfigError : Error {
  using Error::Error;
};

// Metric fails a validity check (positivity, homogeneity, convexity, domain).
struct MetricError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

struct ConvergenceError : Error {
  using Error::Error;
};

struct SolverError : Error {
  using Error::Error;
};

}  // namespace finslab
