#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace delve {

// Base for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A model completion that could not be interpreted. Keeps the raw text so
// callers can log exactly what the model said.
struct ParseError : Error {
  explicit ParseError(const std::string& what, std::string raw_text = {})
      : Error(what), raw(std::move(raw_text)) {}
  std::string raw;
};

// Persona document violates the schema (missing kinds, wrong experience
// count, reserved token in element text, ...).
struct SchemaError : Error {
  using Error::Error;
};

// A prompt template was rendered with an unbound placeholder.
struct TemplateError : Error {
  using Error::Error;
};

// Bad configuration: missing credentials, unknown backend kind, HTTP 4xx.
// Never retried.
struct ConfigError : Error {
  using Error::Error;
};

struct BackendError : Error {
  using Error::Error;
};

// Transport kept failing after the retry budget was spent.
struct BackendUnavailable : BackendError {
  using BackendError::BackendError;
};

// A scripted backend ran out of lines.
struct BackendExhausted : BackendError {
  using BackendError::BackendError;
};

struct TimeoutError : BackendError {
  using BackendError::BackendError;
};

// Invalid argument to a pure computation (empty batch, zero vector, ...).
struct InputError : Error {
  using Error::Error;
};

// Transcript file could not be read back. Carries the 1-based line number
// when one is known (0 otherwise).
struct FormatError : Error {
  explicit FormatError(const std::string& what, int line_number = 0)
      : Error(what), line(line_number) {}
  int line;
};

}  // namespace delve
