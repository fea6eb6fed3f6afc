#pragma once

#include <stdexcept>
#include <string>

namespace ost {

// Base of every error thrown by the library. Callers that only need a
// message can catch this; the CLI maps the subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed on-disk data (bad magic, truncated payload, non-finite values).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Filesystem failure while reading or writing.
class IoError : public Error {
 public:
  using Error::Error;
};

// A domain invariant was violated by caller-supplied data.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Shapes do not line up.
class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Zero-norm vectors and other inputs for which cosine is undefined.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown inside an iterative solver.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Instance exceeds a hard size guard.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Missing or inconsistent configuration (e.g. a class without embeddings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Parameter sets that cannot be combined (name or shape mismatch).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// LLM response could not be turned into a descriptor list. Keeps the raw
// response around for the retry path.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::string raw)
      : Error(what), raw_response_(std::move(raw)) {}
  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

// The LLM endpoint could not be reached or returned a non-2xx status.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Descriptor generation gave up after exhausting its retries.
class GenerationError : public Error {
 public:
  GenerationError(const std::string& what, std::string last_raw)
      : Error(what), last_raw_(std::move(last_raw)) {}
  const std::string& last_raw_response() const noexcept { return last_raw_; }

 private:
  std::string last_raw_;
};

}  // namespace ost
