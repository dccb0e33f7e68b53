#pragma once

#include <stdexcept>
#include <string>

namespace hypball {

// API misuse: mismatched shapes/curvatures, invalid arguments, second backward.
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

// Mathematically invalid input: non-finite values, point outside the ball.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Input combination that collapses a denominator below the 1e-15 guard.
class DegenerateInputError : public std::domain_error {
 public:
  explicit DegenerateInputError(const std::string& what) : std::domain_error(what) {}
};

// Batch/dataset does not satisfy a protocol precondition (e.g. too few
// bonafide samples for a contrastive term, missing modality).
class ProtocolError : public std::runtime_error {
 public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

// Training aborted: non-finite gradient or loss.
class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file; carries the offending line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

// Well-formed file whose content violates the dataset schema.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hypball
