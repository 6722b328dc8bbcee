#pragma once

#include <stdexcept>
#include <string>

namespace dp {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// A file or stream does not conform to its declared layout.
struct FormatError : Error {
  using Error::Error;
};

// Payload values violate a data contract (non-finite, negative depth, ...).
struct DataError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// Shape or argument mismatch between operands.
struct ContractError : Error {
  using Error::Error;
};

// A sampler was asked for more support than the raster provides.
struct InsufficientSupportError : Error {
  using Error::Error;
};

// Scale fit: no co-valid pixels at all.
struct NoSupportError : Error {
  using Error::Error;
};

// Scale fit: support exists but carries no signal (sum of squares is zero).
struct DegenerateSupportError : Error {
  using Error::Error;
};

// Metric or loss evaluation over an empty pixel set.
struct EmptyEvaluationError : Error {
  using Error::Error;
};

// A value left the mathematical domain of an operation (e.g. log of <= 0).
struct DomainError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
  using Error::Error;
};

}  // namespace dp
