#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace owaic {

/// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation (non-finite input,
/// nonpositive scale, K < 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A finalization was requested before enough samples were seen.
class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

/// Internal bookkeeping disagrees with the caller (length mismatch, sample
/// count mismatch, fraction mismatch).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// A density or accumulator produced NaN or an illegal infinity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class PartitionError : public Error {
 public:
  enum class Reason { empty, duplicate_node, incomplete, unknown_node, bad_block_size };

  PartitionError(Reason reason, const std::string& what)
      : Error(what), reason_(reason) {}

  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

/// A kernel needed the value of a node that the assignment does not cover.
class MissingAssignmentError : public Error {
 public:
  explicit MissingAssignmentError(std::string node)
      : Error("no value assigned to node '" + node + "'"), node_(std::move(node)) {}

  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

class CorruptCheckpointError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input. `line` is 1-based; 0 when not tied to a line.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace owaic
