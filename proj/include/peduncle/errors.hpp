#pragma once

#include <stdexcept>
#include <string>

namespace peduncle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A wrench was handed to an operation expecting a different frame.
class FrameMismatchError : public Error {
 public:
  using Error::Error;
};

/// Zero-length (or near zero-length) vector where a direction is required.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// The spring model was evaluated with the attachment point on top of the fruit.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The solver could not recover from a singular model evaluation.
class EvaluationFailure : public Error {
 public:
  using Error::Error;
};

/// Not enough samples for a statistic.
class InsufficientSampleError : public Error {
 public:
  using Error::Error;
};

}  // namespace peduncle
