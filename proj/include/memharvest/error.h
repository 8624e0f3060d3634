#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace memharvest {

// Base for every failure raised by the library. Subclasses map one-to-one
// onto the error kinds callers are expected to branch on.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidUri : public Error {
 public:
  using Error::Error;
  // For URIs read from a list; line is 1-based.
  InvalidUri(const std::string& what, std::size_t line) : Error(what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// Malformed rule or scenario document. line/column are 1-based and zero when
// the problem is structural rather than syntactic.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ", column " +
                         std::to_string(column) + ")"
                   : what),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class DuplicateArchiveId : public Error {
 public:
  using Error::Error;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

class TooManyRetries : public Error {
 public:
  using Error::Error;
};

class RedirectLimit : public Error {
 public:
  using Error::Error;
};

class RedirectLoop : public Error {
 public:
  using Error::Error;
};

class FrameAmbiguous : public Error {
 public:
  using Error::Error;
};

class Undecodable : public Error {
 public:
  using Error::Error;
};

class NoscriptCorruption : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class CorruptEntry : public Error {
 public:
  using Error::Error;
};

class BindError : public Error {
 public:
  using Error::Error;
};

}  // namespace memharvest
