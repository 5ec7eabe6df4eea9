#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crowdabuse {

/// Base class for every data-level failure raised by the library. The CLI maps
/// these to exit status 1; anything else is a bug or a usage error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedLine : public Error {
 public:
  MalformedLine(std::string file, std::size_t line, const std::string& detail)
      : Error(file + ":" + std::to_string(line) + ": malformed line: " + detail),
        file_(std::move(file)),
        line_(line) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class MissingField : public Error {
 public:
  MissingField(std::string file, std::size_t line, std::string field)
      : Error(file + ":" + std::to_string(line) + ": missing field '" + field + "'"),
        file_(std::move(file)),
        line_(line),
        field_(std::move(field)) {}
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string file_;
  std::size_t line_;
  std::string field_;
};

class DanglingReference : public Error {
 public:
  DanglingReference(std::string kind, std::string id)
      : Error("dangling " + kind + " reference '" + id + "'"), kind_(std::move(kind)), id_(std::move(id)) {}
  const std::string& kind() const noexcept { return kind_; }
  const std::string& id() const noexcept { return id_; }

 private:
  std::string kind_;
  std::string id_;
};

/// Raised by load_corpus when the corpus violates an invariant other than a
/// dangling reference (duplicate ids, self-loops, future timestamps, ...).
class InvalidCorpus : public Error {
 public:
  using Error::Error;
};

class DegenerateTraining : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t actual)
      : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " + std::to_string(actual)) {}
};

class EmptyCascade : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyClass : public Error {
 public:
  using Error::Error;
};

class SplitMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

}  // namespace crowdabuse
