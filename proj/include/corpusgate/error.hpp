#pragma once

#include <stdexcept>
#include <string>

namespace corpusgate {

// Base of every error the library throws on purpose. The CLI maps the
// concrete type onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data, invalid configuration or a violated invariant.
class DataError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures (unreadable / unwritable paths).
class IoError : public Error {
 public:
  using Error::Error;
};

// Failures at the model-inference boundary.
class BackendError : public Error {
 public:
  enum class Kind {
    kConnection,
    kTimeout,
    kHttpStatus,
    kMalformedResponse,
    kLengthMismatch,
    kNonFinite,
    kScriptMiss,
    kOther,
  };

  BackendError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(BackendError::Kind kind) noexcept;

// Internal invariant violated; indicates a bug rather than bad input.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace corpusgate
