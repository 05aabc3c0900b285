#pragma once

#include <stdexcept>
#include <string>

namespace rarec {

// Root of every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (corpus lines, state JSON, config).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A caller broke an operation's precondition or an invariant it guards.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Network failure talking to a remote backend, after retries were spent.
class TransportError : public Error {
 public:
  using Error::Error;
};

// The remote side answered, but with something that violates its contract.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

class LlmError : public Error {
 public:
  using Error::Error;
};

class NoMatchError : public LlmError {
 public:
  using LlmError::LlmError;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace rarec
