#pragma once

#include <stdexcept>
#include <string>

namespace petdet {

// Base of all library errors. The CLI maps each category onto an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File could not be opened, read, or written; also covers malformed input files.
class IoError : public Error {
 public:
  using Error::Error;
};

// Structured input (corpus line, model file, config) failed validation.
class ParseError : public IoError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : IoError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NotInVocabulary : public Error {
 public:
  explicit NotInVocabulary(const std::string& token)
      : Error("not in vocabulary: '" + token + "'"), token_(token) {}

  const std::string& token() const noexcept { return token_; }

 private:
  std::string token_;
};

// Training produced nothing to work with (e.g. every word below min_count).
class EmptyVocabulary : public Error {
 public:
  using Error::Error;
};

// Remote scorer unreachable, timed out, or answered outside the wire protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace petdet
