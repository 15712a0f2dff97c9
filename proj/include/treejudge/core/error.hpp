#pragma once

#include <stdexcept>
#include <string>

namespace treejudge {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rubric tree violates a structural invariant.
class StructureError : public Error {
 public:
  using Error::Error;
};

// Canonical document could not be decoded.
class DocumentError : public Error {
 public:
  using Error::Error;
};

class UrlError : public Error {
 public:
  using Error::Error;
};

class StorageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MetricsError : public Error {
 public:
  using Error::Error;
};

// Network or service failure; callers may retry.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Model reply could not be interpreted against the expected shape.
class ResponseFormatError : public Error {
 public:
  using Error::Error;
};

// Infrastructure failure that persisted through retries. A run that hits
// this is marked evaluation-failed and never scored.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace treejudge
