#pragma once

#include <stdexcept>
#include <string>

namespace cotnav {

// Root of every error the library throws. Subclasses exist so callers (the CLI,
// the teleop service) can map failures onto exit codes and HTTP statuses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SizingError : public Error {
 public:
  using Error::Error;
};

class InvalidEpisodeError : public Error {
 public:
  using Error::Error;
};

class IllegalTransitionError : public Error {
 public:
  using Error::Error;
};

class UnsatisfiableEpisodeError : public Error {
 public:
  using Error::Error;
};

class UnreachableError : public Error {
 public:
  using Error::Error;
};

class VocabularyError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class AnnotationError : public Error {
 public:
  AnnotationError(const std::string& what, std::string raw_response)
      : Error(what), raw_response_(std::move(raw_response)) {}
  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ServiceError : public Error {
 public:
  ServiceError(const std::string& what, int status) : Error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace cotnav
