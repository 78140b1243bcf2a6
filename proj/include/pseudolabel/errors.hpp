#pragma once

#include <stdexcept>
#include <string>

namespace pseudolabel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary or text input (wrong length, wrong column count).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Non-numeric token in a text file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class MissingKeyError : public Error {
 public:
  explicit MissingKeyError(std::string key)
      : Error("missing key: " + key), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class ProjectionError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

class SegmentationFailed : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

}  // namespace pseudolabel
