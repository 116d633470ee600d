#pragma once

#include <stdexcept>
#include <string>

namespace hcsbc {

// Base for every error raised by the engine. Callers that only need to
// report failures can catch this; the service layer maps subclasses to
// HTTP status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OntologyError : public Error {
 public:
  using Error::Error;
};

class SegmentError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

// Raised for corpus files; carries the 1-based line of the offending record.
class CorpusError : public Error {
 public:
  CorpusError(const std::string& what, std::size_t line)
      : Error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class BundleError : public Error {
 public:
  using Error::Error;
};

// Embedding provider failures are always retriable from the caller's point
// of view: transport errors, timeouts, malformed or mis-sized responses.
class ProviderError : public Error {
 public:
  using Error::Error;
};

}  // namespace hcsbc
