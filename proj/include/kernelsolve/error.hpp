#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kernelsolve {

/// Bad caller input: dimensions, ids, out-of-range parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed input file. `offset` is a 1-based row for CSV, a byte offset for binary.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed input carrying unusable values (NaN, Inf).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSpdError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularMatrixError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IllConditionedError : public NumericalError {
 public:
  IllConditionedError(const std::string& what, std::size_t node, double condition)
      : NumericalError(what), node_(node), condition_(condition) {}
  std::size_t node() const noexcept { return node_; }
  double condition() const noexcept { return condition_; }

 private:
  std::size_t node_;
  double condition_;
};

/// Broken internal precondition; never caused by user input.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace kernelsolve
